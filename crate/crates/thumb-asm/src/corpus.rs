//! Hand-assembled firmware images with ground-truth feature labels.
//!
//! Labels are written down from the construction of each image (what the
//! code does), not from running any analysis over it. Feature and verdict
//! names use the snake_case keys of the JSON report.

use crate::{sysm, Asm, Cond, VectorSpec, LR, PC, R0, R1, R2, R3, R4, R5, R7, SP};

pub const FLASH_BASE: u32 = 0x0800_0000;
pub const INITIAL_SP: u32 = 0x2000_8000;
/// Start of the Nordic UICR page.
pub const UICR_BASE: u32 = 0x1000_1000;
pub const CANARY_MESSAGE: &str = "*** stack smashing detected ***";

pub const FEATURES: [&str; 11] = [
    "readback_protection",
    "privilege_separation",
    "svc_library_call",
    "stack_separation",
    "stack_limit_registers",
    "task_stack_guard",
    "mpu",
    "smpu",
    "stack_canaries",
    "instruction_barriers",
    "rtos",
];

#[derive(Debug, Clone)]
pub struct SyntheticImage {
    pub name: &'static str,
    pub profile: &'static str,
    pub base: u32,
    pub bytes: Vec<u8>,
    /// Contents of the UICR page, when the package carries one.
    pub uicr: Option<Vec<u8>>,
    /// Expected verdict for every feature in [`FEATURES`].
    pub labels: Vec<(&'static str, &'static str)>,
}

impl SyntheticImage {
    pub fn label(&self, feature: &str) -> &'static str {
        self.labels
            .iter()
            .find(|(f, _)| *f == feature)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("{}: no label for {feature}", self.name))
    }
}

/// Verdicts of a plain bare-metal image under the given profile.
fn baseline(profile: &str) -> Vec<(&'static str, &'static str)> {
    FEATURES
        .iter()
        .map(|&f| {
            let v = match f {
                // Without an RTOS the guard question does not apply; without
                // a CONTROL write there is nothing to fence.
                "task_stack_guard" | "instruction_barriers" => "indeterminate",
                // A vendor with a readback word but no UICR page in the package.
                "readback_protection" if profile == "nordic" => "indeterminate",
                _ => "absent",
            };
            (f, v)
        })
        .collect()
}

fn with(mut labels: Vec<(&'static str, &'static str)>, over: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    for &(f, v) in over {
        let slot = labels.iter_mut().find(|(k, _)| *k == f).expect("known feature");
        slot.1 = v;
    }
    labels
}

/// Vector table, then `body`, then the shared default handler.
pub fn build(base: u32, body: impl FnOnce(&mut Asm)) -> Vec<u8> {
    let mut a = Asm::new(base);
    VectorSpec::standard(INITIAL_SP, "reset", "default").emit(&mut a);
    body(&mut a);
    a.align(4, 0);
    a.label("default").b_self();
    a.align(4, 0);
    a.finish().expect("corpus image assembles")
}

/// `reset: bl main ; b .` followed by a trivial `main`.
fn reset_calls_main(a: &mut Asm) {
    a.label("reset").bl("main").b_self();
}

fn leaf(a: &mut Asm, name: &str) {
    a.label(name).push(&[R7, LR]).movs(R0, 1).adds(R0, 2).pop(&[R7, PC]);
}

/// A function with a clang-style (MOVW/MOVT) stack-protector sequence.
fn clang_protected(a: &mut Asm, name: &str, fail: &str) {
    let chk = format!("{name}_chk");
    a.label(name)
        .push(&[R4, R5, R7, LR])
        .add_rd_sp(R7, 8)
        .sub_sp(40)
        .mov32_label(R1, "__stack_chk_guard")
        .ldr_imm(R1, R1, 0)
        .add_rd_sp(R5, 4)
        .str_imm(R1, SP, 36)
        .bl("leaf")
        .mov32_label(R2, "__stack_chk_guard")
        .ldr_imm(R1, SP, 36)
        .ldr_imm(R2, R2, 0)
        .cmp(R2, R1)
        .bcond(Cond::Ne, &chk)
        .add_sp(40)
        .pop(&[R4, R5, R7, PC]);
    a.label(&chk).bl(fail);
}

/// A function with a gcc-style (literal pool, EORS) stack-protector sequence.
fn gcc_protected(a: &mut Asm, name: &str, fail: &str) {
    let pool = format!("{name}_pool");
    let chk = format!("{name}_chk");
    a.label(name)
        .push(&[LR])
        .sub_sp(12)
        .ldr_lit(R3, &pool)
        .ldr_imm(R3, R3, 0)
        .str_imm(R3, SP, 4)
        .mov_w(R3, 0)
        .bl("leaf")
        .ldr_imm(R2, SP, 4)
        .ldr_lit(R3, &pool)
        .ldr_imm(R3, R3, 0)
        .eors(R2, R3)
        .mov_w(R3, 0)
        .bcond(Cond::Ne, &chk)
        .add_sp(12)
        .pop(&[PC]);
    a.label(&chk).bl(fail);
    a.align(4, 0).label(&pool).word_label("__stack_chk_guard", false);
}

/// A function with an armcc-style (literal pool, CMP) stack-protector sequence.
fn armcc_protected(a: &mut Asm, name: &str, fail: &str) {
    let pool = format!("{name}_pool");
    let chk = format!("{name}_chk");
    a.label(name)
        .push(&[R4, R5, R7, LR])
        .sub_sp(40)
        .ldr_lit(R0, &pool)
        .ldr_imm(R0, R0, 0)
        .str_imm(R0, SP, 36)
        .bl("leaf")
        .ldr_imm(R1, SP, 36)
        .ldr_lit(R2, &pool)
        .ldr_imm(R2, R2, 0)
        .cmp(R2, R1)
        .bcond(Cond::Ne, &chk)
        .add_sp(40)
        .pop(&[R4, R5, R7, PC]);
    a.label(&chk).bl(fail);
    a.align(4, 0).label(&pool).word_label("__stack_chk_guard", false);
}

/// A never-returning handler; loads `msg` if given.
fn fail_fn(a: &mut Asm, name: &str, msg: Option<&str>) {
    a.label(name);
    if let Some(m) = msg {
        let pool = format!("{name}_pool");
        a.ldr_lit(R0, &pool).bl("leaf").b_self();
        a.align(4, 0).label(&pool).word_label(m, false);
    } else {
        a.b_self();
    }
}

/// Data section: the guard word and any strings.
fn data(a: &mut Asm, strings: &[(&str, &str)]) {
    a.align(4, 0).label("__stack_chk_guard").word(0);
    for (label, text) in strings {
        a.align(4, 0).label(label).asciz(text);
    }
}

/// Store `value` to `addr` through `r1`/`r0`.
fn store_word(a: &mut Asm, addr: u32, value: u32) {
    a.mov32(R1, addr).mov32(R0, value).str_imm(R0, R1, 0);
}

pub fn corpus() -> Vec<SyntheticImage> {
    let b = FLASH_BASE;
    let mut out = Vec::new();
    let mut add = |name, profile, bytes, uicr, labels| {
        out.push(SyntheticImage {
            name,
            profile,
            base: b,
            bytes,
            uicr,
            labels,
        })
    };

    add(
        "bare_metal",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).bl("leaf").pop(&[R7, PC]);
            leaf(a, "leaf");
        }),
        None,
        baseline("generic"),
    );

    // Unprivileged thread mode on PSP, stack limits, MPU on, canaries.
    add(
        "hardened_v8m",
        "generic",
        build(b, |a| {
            a.label("reset");
            a.mov32(R0, 0x2000_0000).msr(sysm::MSPLIM, R0).msr(sysm::PSPLIM, R0);
            a.mov32(R1, 0x2000_4000).msr(sysm::PSP, R1);
            a.mov32(R2, 0xE000_ED90);
            a.movs(R0, 0).str_imm(R0, R2, 8);
            a.mov32(R0, 0x2000_0003).str_imm(R0, R2, 0xC);
            a.mov32(R0, 0x2000_FFE1).str_imm(R0, R2, 0x10);
            a.movs(R0, 5).str_imm(R0, R2, 4).dsb().isb();
            a.movs(R0, 3).msr(sysm::CONTROL, R0).isb();
            a.bl("main").b_self();
            a.label("main").push(&[R7, LR]).svc(1).bl("work").pop(&[R7, PC]);
            clang_protected(a, "work", "__stack_chk_fail");
            fail_fn(a, "__stack_chk_fail", None);
            leaf(a, "leaf");
            data(a, &[]);
        }),
        None,
        with(
            baseline("generic"),
            &[
                ("privilege_separation", "present"),
                ("stack_separation", "present"),
                ("stack_limit_registers", "present"),
                ("mpu", "present"),
                ("stack_canaries", "present"),
                ("instruction_barriers", "present"),
            ],
        ),
    );

    // MRS/ORR read-modify-write setting nPRIV, fenced.
    add(
        "control_rmw",
        "generic",
        build(b, |a| {
            a.label("reset")
                .mrs(R0, sysm::CONTROL)
                .orr_imm(R0, R0, 1)
                .msr(sysm::CONTROL, R0)
                .isb()
                .bl("leaf")
                .b_self();
            leaf(a, "leaf");
        }),
        None,
        with(
            baseline("generic"),
            &[("privilege_separation", "present"), ("instruction_barriers", "present")],
        ),
    );

    // nPRIV set, but the ISB is the eleventh instruction after the write.
    add(
        "unfenced_control",
        "generic",
        build(b, |a| {
            a.label("reset").movs(R0, 1).msr(sysm::CONTROL, R0);
            for _ in 0..10 {
                a.nop();
            }
            a.isb().b_self();
        }),
        None,
        with(
            baseline("generic"),
            &[("privilege_separation", "present"), ("instruction_barriers", "absent")],
        ),
    );

    // CONTROL written from a value loaded at run time.
    add(
        "control_unknown",
        "generic",
        build(b, |a| {
            a.label("reset")
                .mov32(R1, 0x2000_0000)
                .ldr_imm(R0, R1, 0)
                .msr(sysm::CONTROL, R0)
                .isb()
                .b_self();
        }),
        None,
        with(
            baseline("generic"),
            &[("privilege_separation", "indeterminate"), ("instruction_barriers", "present")],
        ),
    );

    // SVC used as a library gate while everything stays privileged.
    add(
        "svc_library",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).svc(0).svc(3).bl("leaf").svc(7).pop(&[R7, PC]);
            leaf(a, "leaf");
        }),
        None,
        with(baseline("generic"), &[("svc_library_call", "present")]),
    );

    // SVC next to a CONTROL write whose value cannot be resolved.
    add(
        "svc_unknown_control",
        "generic",
        build(b, |a| {
            a.label("reset")
                .mov32(R1, 0x2000_0000)
                .ldr_imm(R0, R1, 0)
                .msr(sysm::CONTROL, R0)
                .isb()
                .svc(2)
                .b_self();
        }),
        None,
        with(
            baseline("generic"),
            &[
                ("privilege_separation", "indeterminate"),
                ("svc_library_call", "indeterminate"),
                ("instruction_barriers", "present"),
            ],
        ),
    );

    // SPSEL only: threads on PSP, still privileged.
    add(
        "spsel_only",
        "generic",
        build(b, |a| {
            a.label("reset").movs(R0, 2).msr(sysm::CONTROL, R0).isb().b_self();
        }),
        None,
        with(
            baseline("generic"),
            &[("stack_separation", "present"), ("instruction_barriers", "present")],
        ),
    );

    // MPU regions programmed but CTRL written with ENABLE clear.
    add(
        "mpu_never_enabled",
        "generic",
        build(b, |a| {
            a.label("reset");
            a.mov32(R2, 0xE000_ED90);
            a.movs(R0, 0).str_imm(R0, R2, 8);
            a.mov32(R0, 0x2000_0000).str_imm(R0, R2, 0xC);
            a.mov32(R0, 0x0300_0011).str_imm(R0, R2, 0x10);
            a.movs(R0, 0).str_imm(R0, R2, 4).b_self();
        }),
        None,
        with(baseline("generic"), &[("mpu", "indeterminate")]),
    );

    // v7-M MPU enabled with PRIVDEFENA, then CONTROL.nPRIV.
    add(
        "mpu_v7m",
        "generic",
        build(b, |a| {
            a.label("reset");
            a.mov32(R2, 0xE000_ED90);
            a.movs(R0, 0).str_imm(R0, R2, 8);
            a.mov32(R0, 0x2000_0000).str_imm(R0, R2, 0xC);
            a.mov32(R0, 0x1300_0021).str_imm(R0, R2, 0x10);
            a.movs(R0, 5).str_imm(R0, R2, 4).dsb().isb();
            a.movs(R0, 1).msr(sysm::CONTROL, R0).isb().b_self();
        }),
        None,
        with(
            baseline("generic"),
            &[
                ("privilege_separation", "present"),
                ("mpu", "present"),
                ("instruction_barriers", "present"),
            ],
        ),
    );

    // Nordic peripheral-level protection configured; no UICR page shipped.
    add(
        "nordic_smpu",
        "nordic",
        build(b, |a| {
            a.label("reset");
            store_word(a, 0x4000_0600, 0x0000_0003);
            a.b_self();
        }),
        None,
        with(baseline("nordic"), &[("smpu", "present")]),
    );

    let mut uicr_on = vec![0xFF; 0x210];
    uicr_on[0x208..0x20C].copy_from_slice(&0xFFFF_FF00u32.to_le_bytes());
    add(
        "nordic_readback_on",
        "nordic",
        build(b, |a| {
            reset_calls_main(a);
            leaf(a, "main");
        }),
        Some(uicr_on),
        with(baseline("nordic"), &[("readback_protection", "present")]),
    );

    add(
        "nordic_readback_erased",
        "nordic",
        build(b, |a| {
            reset_calls_main(a);
            leaf(a, "main");
        }),
        Some(vec![0xFF; 0x210]),
        with(baseline("nordic"), &[("readback_protection", "absent")]),
    );

    // libc stack protector: message used by a called failure routine.
    add(
        "canary_message_called",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).bl("leaf").bl("__stack_chk_fail").pop(&[R7, PC]);
            fail_fn(a, "__stack_chk_fail", Some("msg"));
            leaf(a, "leaf");
            data(a, &[("msg", CANARY_MESSAGE)]);
        }),
        None,
        with(baseline("generic"), &[("stack_canaries", "present")]),
    );

    // Same message, but its user is only reachable through a stored pointer.
    add(
        "canary_message_uncalled",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).ldr_lit(R0, "fptr").bl("leaf").pop(&[R7, PC]);
            a.align(4, 0).label("fptr").word_label("__stack_chk_fail", true);
            fail_fn(a, "__stack_chk_fail", Some("msg"));
            leaf(a, "leaf");
            data(a, &[("msg", CANARY_MESSAGE)]);
        }),
        None,
        baseline("generic"),
    );

    add(
        "canary_gcc_pattern",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).bl("work").pop(&[R7, PC]);
            gcc_protected(a, "work", "__stack_chk_fail");
            fail_fn(a, "__stack_chk_fail", None);
            leaf(a, "leaf");
            data(a, &[]);
        }),
        None,
        with(baseline("generic"), &[("stack_canaries", "present")]),
    );

    add(
        "canary_armcc_pattern",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main").push(&[R7, LR]).bl("work").pop(&[R7, PC]);
            armcc_protected(a, "work", "__stack_chk_fail");
            fail_fn(a, "__stack_chk_fail", None);
            leaf(a, "leaf");
            data(a, &[]);
        }),
        None,
        with(baseline("generic"), &[("stack_canaries", "present")]),
    );

    // FreeRTOS with a called stack-overflow hook.
    add(
        "freertos_guarded",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main")
                .push(&[R7, LR])
                .ldr_lit(R0, "p_banner")
                .bl("leaf")
                .bl("hook")
                .movs(R0, 2)
                .msr(sysm::CONTROL, R0)
                .isb()
                .pop(&[R7, PC]);
            a.align(4, 0).label("p_banner").word_label("banner", false);
            a.label("hook").push(&[R7, LR]).ldr_lit(R0, "p_hook").bl("leaf").pop(&[R7, PC]);
            a.align(4, 0).label("p_hook").word_label("hookmsg", false);
            leaf(a, "leaf");
            data(a, &[("banner", "FreeRTOS Kernel V10.4.3"), ("hookmsg", "Stack overflow in task %s")]);
        }),
        None,
        with(
            baseline("generic"),
            &[
                ("rtos", "present"),
                ("task_stack_guard", "present"),
                ("stack_separation", "present"),
                ("instruction_barriers", "present"),
            ],
        ),
    );

    // FreeRTOS, but the hook message sits in an uncalled routine.
    add(
        "freertos_unguarded",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            a.label("main")
                .push(&[R7, LR])
                .ldr_lit(R0, "p_banner")
                .ldr_lit(R1, "p_fn")
                .bl("leaf")
                .pop(&[R7, PC]);
            a.align(4, 0)
                .label("p_banner")
                .word_label("banner", false)
                .label("p_fn")
                .word_label("hook", true);
            a.label("hook").push(&[R7, LR]).ldr_lit(R0, "p_hook").bl("leaf").pop(&[R7, PC]);
            a.align(4, 0).label("p_hook").word_label("hookmsg", false);
            leaf(a, "leaf");
            data(a, &[("banner", "FreeRTOS Kernel V10.4.3"), ("hookmsg", "Stack overflow in task %s")]);
        }),
        None,
        with(baseline("generic"), &[("rtos", "present"), ("task_stack_guard", "absent")]),
    );

    // A single unreferenced RTOS name (an SDK path left in data) is noise.
    add(
        "rtos_noise",
        "generic",
        build(b, |a| {
            reset_calls_main(a);
            leaf(a, "main");
            data(a, &[("path", "/opt/sdk/zephyr/include/kernel.h")]);
        }),
        None,
        baseline("generic"),
    );

    // Vector table followed by erased flash.
    add(
        "erased_body",
        "generic",
        {
            let mut a = Asm::new(b);
            VectorSpec::standard(INITIAL_SP, "reset", "reset").emit(&mut a);
            a.label("reset").space(0x200, 0xFF);
            a.finish().expect("assembles")
        },
        None,
        baseline("generic"),
    );

    // PSP handed to a task stack without touching CONTROL.
    add(
        "psp_only",
        "generic",
        build(b, |a| {
            a.label("reset").mov32(R3, 0x2000_2000).msr(sysm::PSP, R3).b_self();
        }),
        None,
        with(baseline("generic"), &[("stack_separation", "present")]),
    );

    // Reading the stack-limit register is not configuring it.
    add(
        "msplim_read_only",
        "generic",
        build(b, |a| {
            a.label("reset").mrs(R0, sysm::MSPLIM).b_self();
        }),
        None,
        baseline("generic"),
    );

    out
}
