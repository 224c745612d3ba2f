//! Event-level privilege and security-state machine.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mpu::Privilege;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Thread,
    Handler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecurityState {
    Secure,
    NonSecure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackSel {
    Msp,
    Psp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecurityContext {
    pub mode: Mode,
    #[serde(rename = "priv")]
    pub privilege: Privilege,
    pub state: SecurityState,
    pub spsel: StackSel,
    /// `CONTROL.nPRIV`; decides thread-mode privilege after exception return.
    pub control_npriv: bool,
}

impl SecurityContext {
    /// Thread mode on MSP with `CONTROL.nPRIV` matching `privilege`.
    pub fn thread(privilege: Privilege, state: SecurityState) -> Self {
        SecurityContext {
            mode: Mode::Thread,
            privilege,
            state,
            spsel: StackSel::Msp,
            control_npriv: !privilege.is_privileged(),
        }
    }

    pub fn invariant_holds(&self) -> bool {
        match self.mode {
            Mode::Handler => self.privilege.is_privileged() && self.spsel == StackSel::Msp,
            Mode::Thread => self.privilege.is_privileged() != self.control_npriv,
        }
    }
}

impl fmt::Display for SecurityContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:?}, {:?}, {:?}, {:?})",
            self.mode, self.privilege, self.state, self.spsel
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Svc,
    ExceptionEntry,
    ExceptionReturn { to: Mode, spsel: StackSel },
    #[serde(rename = "write_control_npriv")]
    WriteControlNPriv { value: bool },
    WriteControlSpsel { value: bool },
    SgEntry,
    BxnsExit,
}

impl Event {
    /// Every distinct event, for bounded exploration.
    pub fn all() -> Vec<Event> {
        let mut v = vec![Event::Svc, Event::ExceptionEntry];
        for to in [Mode::Thread, Mode::Handler] {
            for spsel in [StackSel::Msp, StackSel::Psp] {
                v.push(Event::ExceptionReturn { to, spsel });
            }
        }
        for value in [false, true] {
            v.push(Event::WriteControlNPriv { value });
            v.push(Event::WriteControlSpsel { value });
        }
        v.push(Event::SgEntry);
        v.push(Event::BxnsExit);
        v
    }

    /// Events that architecturally raise privilege.
    pub fn is_escalation(self) -> bool {
        matches!(self, Event::Svc | Event::ExceptionEntry)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransitionError {
    #[error("illegal transition: {event:?} from {from}")]
    IllegalTransition { from: SecurityContext, event: Event },
    #[error("context violates mode invariants: {0}")]
    InvalidContext(SecurityContext),
}

fn enter_handler(ctx: &SecurityContext) -> SecurityContext {
    SecurityContext {
        mode: Mode::Handler,
        privilege: Privilege::Privileged,
        spsel: StackSel::Msp,
        ..*ctx
    }
}

pub fn step_security_context(ctx: &SecurityContext, event: Event) -> Result<SecurityContext, TransitionError> {
    if !ctx.invariant_holds() {
        return Err(TransitionError::InvalidContext(*ctx));
    }
    let illegal = || TransitionError::IllegalTransition { from: *ctx, event };
    let privileged = ctx.privilege.is_privileged();
    let next = match event {
        Event::Svc | Event::ExceptionEntry => enter_handler(ctx),
        Event::ExceptionReturn { to, spsel } => {
            if ctx.mode != Mode::Handler {
                return Err(illegal());
            }
            match to {
                Mode::Handler if spsel == StackSel::Psp => return Err(illegal()),
                Mode::Handler => *ctx,
                Mode::Thread => SecurityContext {
                    mode: Mode::Thread,
                    privilege: if ctx.control_npriv {
                        Privilege::Unprivileged
                    } else {
                        Privilege::Privileged
                    },
                    spsel,
                    ..*ctx
                },
            }
        }
        Event::WriteControlNPriv { value } => {
            if !privileged {
                *ctx
            } else if ctx.mode == Mode::Thread {
                SecurityContext {
                    control_npriv: value,
                    privilege: if value {
                        Privilege::Unprivileged
                    } else {
                        Privilege::Privileged
                    },
                    ..*ctx
                }
            } else {
                SecurityContext {
                    control_npriv: value,
                    ..*ctx
                }
            }
        }
        Event::WriteControlSpsel { value } => {
            if privileged && ctx.mode == Mode::Thread {
                SecurityContext {
                    spsel: if value { StackSel::Psp } else { StackSel::Msp },
                    ..*ctx
                }
            } else {
                *ctx
            }
        }
        Event::SgEntry => SecurityContext {
            state: SecurityState::Secure,
            ..*ctx
        },
        Event::BxnsExit => {
            if ctx.state != SecurityState::Secure {
                return Err(illegal());
            }
            SecurityContext {
                state: SecurityState::NonSecure,
                ..*ctx
            }
        }
    };
    debug_assert!(next.invariant_holds());
    Ok(next)
}

/// Apply events in order, stopping at the first illegal one.
pub fn run_events(start: &SecurityContext, events: &[Event]) -> Result<Vec<SecurityContext>, (usize, TransitionError)> {
    let mut trace = vec![*start];
    let mut cur = *start;
    for (i, &e) in events.iter().enumerate() {
        cur = step_security_context(&cur, e).map_err(|err| (i, err))?;
        trace.push(cur);
    }
    Ok(trace)
}

/// Depth-first enumeration of every legal event string up to `depth`.
/// `visit` sees each reached context with the path leading to it.
pub fn explore(start: &SecurityContext, depth: usize, visit: &mut impl FnMut(&[Event], &SecurityContext)) {
    let events = Event::all();
    let mut path = Vec::with_capacity(depth);
    fn go(
        ctx: &SecurityContext,
        depth: usize,
        events: &[Event],
        path: &mut Vec<Event>,
        visit: &mut impl FnMut(&[Event], &SecurityContext),
    ) {
        visit(path, ctx);
        if path.len() == depth {
            return;
        }
        for &e in events {
            if let Ok(next) = step_security_context(ctx, e) {
                path.push(e);
                go(&next, depth, events, path, visit);
                path.pop();
            }
        }
    }
    go(start, depth, &events, &mut path, visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svc_escalates() {
        let u = SecurityContext::thread(Privilege::Unprivileged, SecurityState::NonSecure);
        let h = step_security_context(&u, Event::Svc).unwrap();
        assert_eq!((h.mode, h.privilege, h.spsel), (Mode::Handler, Privilege::Privileged, StackSel::Msp));
    }

    #[test]
    fn no_self_escalation() {
        let u = SecurityContext::thread(Privilege::Unprivileged, SecurityState::NonSecure);
        assert_eq!(step_security_context(&u, Event::WriteControlNPriv { value: false }), Ok(u));
    }

    #[test]
    fn secure_gateway() {
        let p = SecurityContext::thread(Privilege::Privileged, SecurityState::NonSecure);
        let s = step_security_context(&p, Event::SgEntry).unwrap();
        assert_eq!(s, SecurityContext { state: SecurityState::Secure, ..p });
        assert_eq!(step_security_context(&s, Event::SgEntry), Ok(s));
        assert!(step_security_context(&p, Event::BxnsExit).is_err());
    }

    #[test]
    fn return_restores_thread_privilege() {
        let u = SecurityContext::thread(Privilege::Unprivileged, SecurityState::Secure);
        let trace = run_events(
            &u,
            &[Event::Svc, Event::ExceptionReturn { to: Mode::Thread, spsel: StackSel::Psp }],
        )
        .unwrap();
        let last = trace.last().unwrap();
        assert_eq!((last.privilege, last.spsel), (Privilege::Unprivileged, StackSel::Psp));
    }

    #[test]
    fn handler_can_drop_thread_privilege() {
        let p = SecurityContext::thread(Privilege::Privileged, SecurityState::Secure);
        let trace = run_events(
            &p,
            &[
                Event::ExceptionEntry,
                Event::WriteControlNPriv { value: true },
                Event::ExceptionReturn { to: Mode::Thread, spsel: StackSel::Msp },
            ],
        )
        .unwrap();
        assert_eq!(trace[2].privilege, Privilege::Privileged);
        assert_eq!(trace[3].privilege, Privilege::Unprivileged);
    }
}
