//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cm_scope::detectors::{Detail, Evidence, ProfileSet};
use cm_scope::disasm::{decode_one, disassemble, CodeView, DisasmOptions};
use cm_scope::image::{default_memory_map, infer_base_address, BaseOptions};
use cm_scope::ingest::{ihex, load_raw, srec, IngestError, Segment, SegmentList};
use cm_scope::report::{aggregate, format_percent, to_table, CorpusSummary};
use cm_scope::secmodel::{
    eval_mpu_access, explore, resolve_attribution, Access, Arch, AttrRegion, AttributionConfig, Decision,
    Event, Mode, MpuConfig, MpuRegion, Privilege, RegionExtent, SecurityAttr, SecurityContext,
    SecurityState,
};
use cm_scope::{run_all, Feature, FeatureMatrix, Finding, Verdict};
use thumb_asm::corpus::{build, corpus};
use thumb_asm::{sysm, Asm, VectorSpec, LR, PC, R0, R1, R2, R3, R4, R7};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------

const PER_IMAGE_BUDGET: Duration = Duration::from_secs(1);

fn corpus_oracle() -> Outcome {
    let images = corpus();
    let mut wrong = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut labels = 0;
    for img in &images {
        let t = Instant::now();
        let m = common::analyze(img);
        slowest = slowest.max(t.elapsed());
        labels += img.labels.len();
        wrong.extend(common::mismatches(img, &m).into_iter().map(|e| format!("{}: {e}", img.name)));
    }
    check(images.len() >= 12, || format!("only {} images", images.len()))?;
    // Every feature must be exercised in each of its reachable states.
    for f in thumb_asm::corpus::FEATURES {
        for v in ["present", "absent"] {
            check(images.iter().any(|i| i.label(f) == v), || format!("no {v} image for {f}"))?;
        }
    }
    check(wrong.is_empty(), || wrong.join("; "))?;
    check(slowest < PER_IMAGE_BUDGET, || format!("slowest image took {slowest:?}"))?;
    Ok(format!(
        "{} images, {labels} labels, 0 mismatches, slowest {:.1} ms",
        images.len(),
        slowest.as_secs_f64() * 1e3
    ))
}

// ---------------------------------------------------------------------------

/// CONTROL write followed by an ISB as the `pos`-th following instruction.
fn barrier_image(pos: Option<usize>) -> Vec<u8> {
    build(0x0800_0000, |a| {
        a.label("reset");
        if let Some(pos) = pos {
            a.movs(R0, 1).msr(sysm::CONTROL, R0);
            for _ in 1..pos {
                a.nop();
            }
            a.isb();
        } else {
            a.movs(R0, 1).isb();
        }
        a.b_self();
    })
}

fn barrier_verdict(bytes: &[u8]) -> (Verdict, Detail) {
    let profiles = ProfileSet::builtin();
    let m = run_all(&load_raw(bytes, None).unwrap(), profiles.require("generic").unwrap());
    let f = m.finding(Feature::InstructionBarriers).unwrap();
    (f.verdict, f.detail.clone())
}

fn barrier_boundary() -> Outcome {
    let cases = [
        (Some(1), Verdict::Present),
        (Some(10), Verdict::Present),
        (Some(11), Verdict::Absent),
        (None, Verdict::Indeterminate),
    ];
    for (pos, want) in cases {
        let (got, detail) = barrier_verdict(&barrier_image(pos));
        check(got == want, || format!("ISB at {pos:?}: expected {want}, got {got} ({detail:?})"))?;
    }
    // One fenced and one unfenced write: the image is non-compliant.
    let mixed = build(0x0800_0000, |a| {
        a.label("reset").movs(R0, 1).msr(sysm::CONTROL, R0).isb();
        a.movs(R0, 3).msr(sysm::CONTROL, R0);
        for _ in 0..11 {
            a.nop();
        }
        a.isb().b_self();
    });
    let (got, _) = barrier_verdict(&mixed);
    check(got == Verdict::Absent, || format!("mixed writes: got {got}"))?;
    Ok("positions 1 and 10 compliant, 11 non-compliant, no writes indeterminate".into())
}

// ---------------------------------------------------------------------------

fn canary_detection() -> Outcome {
    let images = corpus();
    let find = |n: &str| images.iter().find(|i| i.name == n).unwrap();
    let cases = [
        ("canary_message_called", Verdict::Present, Some(true)),
        ("canary_message_uncalled", Verdict::Absent, None),
        ("canary_gcc_pattern", Verdict::Present, Some(false)),
        ("canary_armcc_pattern", Verdict::Present, Some(false)),
        ("hardened_v8m", Verdict::Present, Some(false)),
    ];
    for (name, want, via) in cases {
        let m = common::analyze(find(name));
        let f = m.finding(Feature::StackCanaries).unwrap();
        check(f.verdict == want, || format!("{name}: expected {want}, got {}", f.verdict))?;
        if let (Some(via), Detail::Canary { via_string, .. }) = (via, &f.detail) {
            check(*via_string == via, || format!("{name}: via_string = {via_string}"))?;
        }
    }
    Ok("called message present, uncalled message absent, template-only present (3 toolchains)".into())
}

// ---------------------------------------------------------------------------

const ATTRS: [SecurityAttr; 3] = [SecurityAttr::NonSecure, SecurityAttr::Nsc, SecurityAttr::Secure];

/// Security ranking, highest wins.
fn rank(a: SecurityAttr) -> u8 {
    match a {
        SecurityAttr::NonSecure => 0,
        SecurityAttr::Nsc => 1,
        SecurityAttr::Secure => 2,
    }
}

fn stricter(a: SecurityAttr, b: SecurityAttr) -> SecurityAttr {
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

/// Per-address attribution computed directly from the region lists.
fn attribution_oracle(cfg: &AttributionConfig, addr: u32) -> SecurityAttr {
    let mut idau = SecurityAttr::NonSecure;
    for r in &cfg.idau_regions {
        if r.start <= addr && addr <= r.end {
            idau = r.attr;
        }
    }
    let sau = if cfg.sau_enabled {
        let mut s = SecurityAttr::Secure;
        for r in &cfg.sau_regions {
            if r.start <= addr && addr <= r.end {
                s = r.attr;
            }
        }
        s
    } else if cfg.all_ns {
        SecurityAttr::NonSecure
    } else {
        SecurityAttr::Secure
    };
    stricter(idau, sau)
}

fn random_regions(rng: &mut ChaCha8Rng, max: usize) -> Vec<AttrRegion> {
    let n = rng.random_range(0..=max);
    let mut points: Vec<u32> = (0..2 * n).map(|_| rng.random()).collect();
    points.sort_unstable();
    points.dedup();
    points
        .chunks_exact(2)
        .map(|p| AttrRegion {
            start: p[0],
            end: p[1],
            attr: ATTRS[rng.random_range(0..3)],
        })
        .collect()
}

fn attribution() -> Outcome {
    let region = |attr| AttrRegion { start: 0x1000_0000, end: 0x1000_FFFF, attr };
    for idau in ATTRS {
        for sau in ATTRS {
            let cfg = AttributionConfig {
                idau_regions: vec![region(idau)],
                sau_regions: vec![region(sau)],
                sau_enabled: true,
                all_ns: false,
            };
            let want = stricter(idau, sau);
            let got = resolve_attribution(&cfg, 0x1000_8000);
            check(got == want, || format!("idau {idau} + sau {sau}: expected {want}, got {got}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xA77B);
    let mut probes = 0usize;
    for layout in 0..1000 {
        let cfg = AttributionConfig {
            idau_regions: random_regions(&mut rng, 6),
            sau_regions: random_regions(&mut rng, 8),
            sau_enabled: rng.random_bool(0.8),
            all_ns: rng.random_bool(0.5),
        };
        cfg.validate().map_err(|e| format!("layout {layout}: generator produced {e}"))?;
        let mut addrs: Vec<u32> = (0..64).map(|_| rng.random()).collect();
        addrs.extend([0, u32::MAX]);
        for r in cfg.idau_regions.iter().chain(&cfg.sau_regions) {
            addrs.extend([r.start.wrapping_sub(1), r.start, r.end, r.end.wrapping_add(1)]);
        }
        for a in addrs {
            probes += 1;
            let (want, got) = (attribution_oracle(&cfg, a), resolve_attribution(&cfg, a));
            check(want == got, || format!("layout {layout} @ {a:#010x}: oracle {want}, got {got}"))?;
        }
    }
    Ok(format!("9/9 attribute pairs; 1000 random layouts, {probes} probes agree"))
}

// ---------------------------------------------------------------------------

/// Access-permission tables transcribed from the architecture manuals:
/// (code, privileged rights, unprivileged rights).
const V7M_TABLE: [(u8, &str, &str); 6] = [
    (0b000, "--", "--"),
    (0b001, "rw", "--"),
    (0b010, "rw", "r-"),
    (0b011, "rw", "rw"),
    (0b101, "r-", "--"),
    (0b110, "r-", "r-"),
];
const V8M_TABLE: [(u8, &str, &str); 4] = [
    (0b00, "rw", "--"),
    (0b01, "rw", "rw"),
    (0b10, "r-", "--"),
    (0b11, "r-", "r-"),
];

fn single_region(arch: Arch, ap: u8, xn: bool) -> MpuConfig {
    let extent = match arch {
        Arch::V7m => RegionExtent::Sized { size_log2: 16, srd: 0 },
        Arch::V8m => RegionExtent::Limit { limit: 0x2000_FFFF },
    };
    MpuConfig {
        arch,
        regions: vec![MpuRegion {
            number: 0,
            base: 0x2000_0000,
            extent,
            ap,
            xn,
            pxn: false,
            enabled: true,
        }],
        enable: true,
        privileged_default: false,
        max_regions: arch.max_regions(),
        pxn_supported: false,
    }
}

fn mpu_truth_tables() -> Outcome {
    let mut rows = 0;
    let tables: [(Arch, &[(u8, &str, &str)]); 2] = [(Arch::V7m, &V7M_TABLE), (Arch::V8m, &V8M_TABLE)];
    let map = default_memory_map();
    for (arch, table) in tables {
        check(arch.ap_codes().len() == table.len(), || format!("{arch:?}: code count"))?;
        for &(ap, p_rights, u_rights) in table {
            for xn in [false, true] {
                let cfg = single_region(arch, ap, xn);
                let mut allowed = BTreeMap::new();
                for (privilege, rights) in [(Privilege::Privileged, p_rights), (Privilege::Unprivileged, u_rights)] {
                    for access in [Access::Read, Access::Write, Access::Execute] {
                        let r = rights.contains('r');
                        let want = match access {
                            Access::Read => r,
                            Access::Write => rights.contains('w'),
                            Access::Execute => r && !xn,
                        };
                        let got = eval_mpu_access(&cfg, &map, 0x2000_0100, privilege, access)
                            .map_err(|e| format!("{arch:?} ap {ap:#b}: {e}"))?;
                        check(got == Decision::from_bool(want), || {
                            format!("{arch:?} ap {ap:#05b} xn {xn} {privilege:?} {access:?}: expected {want}, got {got}")
                        })?;
                        allowed.insert((privilege, access), got.allowed());
                        rows += 1;
                    }
                }
                for access in [Access::Read, Access::Write, Access::Execute] {
                    let u = allowed[&(Privilege::Unprivileged, access)];
                    let p = allowed[&(Privilege::Privileged, access)];
                    check(!u || p, || format!("{arch:?} ap {ap:#b} xn {xn}: unprivileged {access:?} exceeds privileged"))?;
                }
            }
        }
    }
    Ok(format!("{rows} (code, privilege, access, xn) rows match; privileged ⊇ unprivileged"))
}

// ---------------------------------------------------------------------------

const BASES: [u32; 4] = [0x0, 0x4000, 0x2_6000, 0x0800_0000];

/// Random firmware: a vector table, a handful of functions calling each
/// other, literal pools holding function pointers and data, and a block of
/// constant data large enough that several candidate bases are feasible.
fn random_firmware(rng: &mut ChaCha8Rng, base: u32) -> Vec<u8> {
    let nfuncs = rng.random_range(4..12);
    let fname = |i: usize| format!("f{i}");
    let mut a = Asm::new(base);
    let mut spec = VectorSpec::standard(0x2000_0000 + 0x400 * rng.random_range(1..64u32), "f0", "f1");
    for h in spec.handlers.iter_mut().skip(1).flatten() {
        *h = fname(rng.random_range(1..nfuncs));
    }
    for _ in 0..rng.random_range(0..16) {
        spec.handlers.push(Some(fname(rng.random_range(1..nfuncs))));
    }
    spec.emit(&mut a);
    for i in 0..nfuncs {
        let pool = format!("pool{i}");
        a.label(&fname(i)).push(&[R4, R7, LR]);
        for _ in 0..rng.random_range(2..24) {
            match rng.random_range(0..6) {
                0 => {
                    a.movs(rng.random_range(0..4), rng.random());
                }
                1 => {
                    a.adds(R0, rng.random());
                }
                2 => {
                    a.ldr_lit(R1, &pool).ldr_imm(R2, R1, 0);
                }
                3 => {
                    a.bl(&fname(rng.random_range(0..nfuncs)));
                }
                4 => {
                    a.mov32(R3, rng.random());
                }
                _ => {
                    a.nop();
                }
            }
        }
        a.pop(&[R4, R7, PC]);
        a.align(4, 0).label(&pool);
        // Function pointers (Thumb bit set) and data words.
        for _ in 0..rng.random_range(1..4) {
            if rng.random_bool(0.5) {
                a.word_label(&fname(rng.random_range(0..nfuncs)), true);
            } else {
                a.word(rng.random());
            }
        }
    }
    let data_len = rng.random_range(0x1800..0x4000);
    let data: Vec<u8> = (0..data_len).map(|_| rng.random()).collect();
    a.bytes(&data);
    a.finish().expect("random firmware assembles")
}

fn infer(bytes: &[u8]) -> Option<u32> {
    infer_base_address(bytes, &default_memory_map(), &BaseOptions::default())
        .ok()
        .map(|c| c.base)
}

fn infer_all(images: &[(u32, Vec<u8>)], jobs: usize) -> Vec<Option<u32>> {
    let chunk = images.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = images
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|(_, b)| infer(b)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

fn base_inference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA5E);
    let images: Vec<(u32, Vec<u8>)> = (0..20)
        .map(|i| {
            let base = BASES[i % BASES.len()];
            (base, random_firmware(&mut rng, base))
        })
        .collect();
    let first = infer_all(&images, 1);
    for ((base, bytes), got) in images.iter().zip(&first) {
        check(*got == Some(*base), || {
            format!("image of {} bytes at {base:#x}: inferred {got:x?}", bytes.len())
        })?;
    }
    for run in 0..10 {
        let jobs = [1, 2, 4, 8][run % 4];
        let again = infer_all(&images, jobs);
        check(again == first, || format!("run {run} with {jobs} jobs differs"))?;
    }
    let multi = images
        .iter()
        .filter(|(_, b)| {
            cm_scope::image::rank_bases(b, &default_memory_map(), &BaseOptions::default())
                .is_ok_and(|r| r.len() > 1)
        })
        .count();
    Ok(format!("20/20 exact ({multi} with several feasible candidates); stable over 10 runs at 1-8 jobs"))
}

// ---------------------------------------------------------------------------

fn random_segments(rng: &mut ChaCha8Rng) -> SegmentList {
    let n = rng.random_range(1..=6);
    let mut segs = Vec::new();
    // Mix low (16-bit), mid (24-bit) and full 32-bit addresses.
    let mut at: u64 = match rng.random_range(0..3) {
        0 => rng.random_range(0..0x8000),
        1 => rng.random_range(0x1_0000..0x80_0000),
        _ => rng.random_range(0x0800_0000..0xF000_0000),
    };
    for _ in 0..n {
        let len = rng.random_range(1..=96usize);
        if at + len as u64 > u32::MAX as u64 {
            break;
        }
        let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        segs.push(Segment::new(at as u32, data));
        // Keep a gap so the decoder cannot coalesce neighbours; sometimes
        // cross a 64 KiB boundary.
        at += len as u64 + rng.random_range(1..0x30) + if rng.random_bool(0.2) { 0x1_0000 } else { 0 };
    }
    let mut list = SegmentList::from_segments(segs);
    if rng.random_bool(0.5) {
        list.start_address = Some(rng.random::<u32>() | 1);
    }
    list
}

/// Flip each bit of every record's checksum byte; each corruption must be
/// rejected as a checksum error on that record's line.
fn checksum_flips(text: &str, decode: impl Fn(&str) -> Result<SegmentList, IngestError>) -> Result<usize, String> {
    let lines: Vec<&str> = text.lines().collect();
    let mut n = 0;
    for (i, line) in lines.iter().enumerate() {
        let cut = line.len() - 2;
        let sum = u8::from_str_radix(&line[cut..], 16).map_err(|e| e.to_string())?;
        for bit in 0..8 {
            let bad = format!("{}{:02X}", &line[..cut], sum ^ (1 << bit));
            let mut corrupted = lines.clone();
            corrupted[i] = &bad;
            let r = decode(&corrupted.join("\n"));
            check(r == Err(IngestError::BadChecksum { line: i + 1 }), || {
                format!("line {} bit {bit}: {r:?}", i + 1)
            })?;
            n += 1;
        }
    }
    Ok(n)
}

fn loader_bit_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10AD);
    let mut flips = 0;
    for case in 0..200 {
        let segs = random_segments(&mut rng);
        let hex = ihex::encode_intel_hex(&segs);
        let back = ihex::decode_intel_hex(&hex).map_err(|e| format!("case {case} hex: {e}"))?;
        check(back == segs, || format!("case {case}: Intel HEX round trip differs"))?;
        check(ihex::encode_intel_hex(&back) == hex, || format!("case {case}: HEX re-encode differs"))?;
        flips += checksum_flips(&hex, ihex::decode_intel_hex).map_err(|e| format!("case {case} hex: {e}"))?;

        let mut with_header = segs.clone();
        if rng.random_bool(0.5) {
            with_header.header = Some(format!("fw-{case}"));
        }
        let s = srec::encode_srecord(&with_header);
        let back = srec::decode_srecord(&s).map_err(|e| format!("case {case} srec: {e}"))?;
        check(back == with_header, || format!("case {case}: S-record round trip differs"))?;
        check(srec::encode_srecord(&back) == s, || format!("case {case}: S-record re-encode differs"))?;
        flips += checksum_flips(&s, srec::decode_srecord).map_err(|e| format!("case {case} srec: {e}"))?;
    }
    Ok(format!("200 segment lists round-trip in both formats; {flips} checksum bit flips rejected"))
}

// ---------------------------------------------------------------------------

fn transition_machine() -> Outcome {
    let mut visited = 0usize;
    let mut escalations = 0usize;
    let starts = [Privilege::Privileged, Privilege::Unprivileged]
        .into_iter()
        .flat_map(|p| [SecurityState::Secure, SecurityState::NonSecure].map(|s| SecurityContext::thread(p, s)));
    for start in starts {
        let mut failure = None;
        explore(&start, 6, &mut |path, ctx| {
            visited += 1;
            if failure.is_some() {
                return;
            }
            if ctx.mode == Mode::Handler && ctx.privilege != Privilege::Privileged {
                failure = Some(format!("{start:?} --{path:?}--> unprivileged handler"));
            }
            if start.privilege == Privilege::Unprivileged && ctx.privilege == Privilege::Privileged {
                escalations += 1;
                if !path.iter().any(|e| matches!(e, Event::Svc | Event::ExceptionEntry)) {
                    failure = Some(format!("{start:?} --{path:?}--> privileged without an exception"));
                }
            }
        });
        if let Some(f) = failure {
            return Err(f);
        }
    }
    check(escalations > 0, || "no legitimate escalation was ever explored".into())?;
    Ok(format!("{visited} reachable (path, context) pairs up to depth 6 from 4 thread-mode starts"))
}

// ---------------------------------------------------------------------------

/// A first halfword with top five bits 0b11101, 0b11110 or 0b11111 starts a
/// 32-bit instruction; anything else is 16-bit.
fn expected_width(hw1: u16) -> u8 {
    if matches!(hw1 >> 11, 0b11101..=0b11111) {
        4
    } else {
        2
    }
}

fn disasm_fuzz() -> Outcome {
    const BUFFERS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let mut decoded = 0usize;
    let mut buf = [0u8; 16];
    for i in 0..BUFFERS {
        let len = rng.random_range(0..=buf.len());
        rng.fill(&mut buf[..len]);
        let code = CodeView::new(0x0800_0000, &buf[..len]);
        for off in (0..len as u32).step_by(2) {
            let addr = 0x0800_0000 + off;
            let Ok(ins) = decode_one(&code, addr) else { continue };
            decoded += 1;
            let hw1 = u16::from_le_bytes([buf[off as usize], buf[off as usize + 1]]);
            check(ins.width == expected_width(hw1), || {
                format!("buffer {i} @ {off}: halfword {hw1:#06x} decoded with width {}", ins.width)
            })?;
            check(ins.addr == addr && ins.raw().len() == ins.width as usize, || {
                format!("buffer {i} @ {off}: inconsistent instruction {ins:?}")
            })?;
        }
        // Exercise recursive descent on a sample of larger buffers.
        if i % 2000 == 0 {
            let big: Vec<u8> = (0..512).map(|_| rng.random()).collect();
            let code = CodeView::new(0, &big);
            let idx = disassemble(&code, [0, 0x40, 0x100], &DisasmOptions::default());
            for ins in idx.iter() {
                let hw1 = code.read_u16(ins.addr).unwrap();
                check(ins.width == expected_width(hw1), || format!("walk width at {:#x}", ins.addr))?;
            }
        }
    }
    Ok(format!("{BUFFERS} buffers, {decoded} instructions, width rule holds on all"))
}

// ---------------------------------------------------------------------------

const PROFILES: [&str; 3] = ["generic", "nordic", "stm32"];
const VERDICTS: [Verdict; 3] = [Verdict::Present, Verdict::Absent, Verdict::Indeterminate];

fn matrix(id: String, profile: &str, device: Option<String>, verdicts: impl Fn(Feature) -> Verdict) -> FeatureMatrix {
    let findings = Feature::ALL
        .into_iter()
        .map(|f| {
            let v = verdicts(f);
            let evidence = if v == Verdict::Present { vec![Evidence::new(0x100, "synthetic")] } else { vec![] };
            (f, Finding::new(f, v, evidence, Detail::None))
        })
        .collect();
    FeatureMatrix {
        image_id: id,
        profile: profile.into(),
        device,
        base: Some(0),
        findings,
        notes: vec![],
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, i: usize) -> FeatureMatrix {
    let verdicts: Vec<Verdict> = (0..Feature::ALL.len()).map(|_| VERDICTS[rng.random_range(0..3)]).collect();
    let device = rng.random_bool(0.5).then(|| format!("dev{}", rng.random_range(0..8)));
    let profile = PROFILES[rng.random_range(0..3)];
    matrix(format!("img{i}"), profile, device, |f| {
        verdicts[Feature::ALL.iter().position(|&g| g == f).unwrap()]
    })
}

fn aggregation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA66);
    for trial in 0..200 {
        let n = rng.random_range(1..=100);
        let mut ms: Vec<FeatureMatrix> = (0..n).map(|i| random_matrix(&mut rng, i)).collect();
        let whole = aggregate(&ms).unwrap();
        // Random partition, each part aggregated, merged in shuffled order.
        ms.shuffle(&mut rng);
        let mut parts: Vec<Vec<FeatureMatrix>> = Vec::new();
        let mut rest = &ms[..];
        while !rest.is_empty() {
            let k = rng.random_range(1..=rest.len());
            parts.push(rest[..k].to_vec());
            rest = &rest[k..];
        }
        let mut sums: Vec<CorpusSummary> = parts.iter().map(|p| aggregate(p).unwrap()).collect();
        sums.shuffle(&mut rng);
        let left = sums.iter().fold(CorpusSummary::default(), |acc, s| acc.merge(s));
        let right = sums
            .iter()
            .rev()
            .fold(CorpusSummary::default(), |acc, s| s.clone().merge(&acc));
        check(left == whole && right == whole, || format!("trial {trial}: partition merge differs"))?;
        check(to_table(&left) == to_table(&whole), || format!("trial {trial}: table differs"))?;
    }

    // 4 images, one using PSP: 1/4.
    let psp: Vec<FeatureMatrix> = (0..4)
        .map(|i| {
            matrix(format!("s{i}"), "generic", None, |f| match f {
                Feature::StackSeparation if i == 0 => Verdict::Present,
                _ => Verdict::Absent,
            })
        })
        .collect();
    let s = aggregate(&psp).unwrap();
    let got = format_percent(s.total.counts(Feature::StackSeparation).percent_hundredths(Feature::StackSeparation));
    check(got == "25.00%", || format!("stack separation: {got}"))?;

    // 3 RTOS images (2 guarded) and 5 bare-metal ones: 2/3, bare metal excluded.
    let rtos: Vec<FeatureMatrix> = (0..8)
        .map(|i| {
            matrix(format!("r{i}"), "generic", None, |f| match f {
                Feature::TaskStackGuard if i < 2 => Verdict::Present,
                Feature::TaskStackGuard if i == 2 => Verdict::Absent,
                Feature::TaskStackGuard => Verdict::Indeterminate,
                _ => Verdict::Absent,
            })
        })
        .collect();
    let s = aggregate(&rtos).unwrap();
    let got = format_percent(s.total.counts(Feature::TaskStackGuard).percent_hundredths(Feature::TaskStackGuard));
    check(got == "66.67%", || format!("task guard: {got}"))?;
    check(to_table(&s).contains("66.67%"), || "table lacks 66.67%".into())?;
    check(aggregate(&[]).is_err(), || "empty corpus accepted".into())?;
    Ok("200 random corpora merge associatively; 25.00% and 66.67% reproduced".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("synthetic corpus oracle", corpus_oracle),
        ("barrier boundary", barrier_boundary),
        ("canary detection", canary_detection),
        ("SAU/IDAU attribution", attribution),
        ("MPU truth tables", mpu_truth_tables),
        ("base-address inference", base_inference),
        ("loader bit-exactness", loader_bit_exactness),
        ("transition machine", transition_machine),
        ("disassembler fuzz", disasm_fuzz),
        ("aggregation", aggregation),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<24} {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<24} {detail} [{secs:.2}s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
