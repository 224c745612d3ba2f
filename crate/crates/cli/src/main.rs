use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cm_scope::detectors::{run_with, DetectorRegistry, PipelineOptions, ProfileSet};
use cm_scope::hexnum::{format_u32, parse_u32};
use cm_scope::image::default_memory_map;
use cm_scope::ingest::{load_entry, load_path, CorpusManifest, FormatRegistry, LoadOptions, META_PROFILE};
use cm_scope::report::{aggregate, exit, to_json, to_table};
use cm_scope::secmodel::{
    audit_mpu_config, eval_mpu_access, parse_attribution_config, parse_mpu_config, parse_transition_script,
    resolve_attribution, step_security_context, Access, Privilege,
};
use cm_scope::{Feature, FeatureMatrix};

#[derive(Parser)]
#[command(name = "cm-scope", version, about = "Security-feature analysis of raw Cortex-M firmware")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Directory of extra vendor profiles (*.toml), layered over the built-ins.
    #[arg(long, env = "CM_SCOPE_PROFILES", global = true)]
    profiles_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a single firmware file.
    Analyze {
        file: PathBuf,
        /// Load address; inferred when omitted.
        #[arg(long, value_parser = parse_u32)]
        base: Option<u32>,
        /// Container format (raw, ihex, srec); detected when omitted.
        #[arg(long)]
        format: Option<String>,
        #[arg(long, default_value = "generic")]
        profile: String,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Base-candidate alignment.
        #[arg(long, value_parser = parse_u32)]
        alignment: Option<u32>,
        /// Comma-separated detector names; all when omitted.
        #[arg(long, value_delimiter = ',')]
        detectors: Vec<String>,
    },
    /// Analyze every entry of a corpus manifest and aggregate the results.
    Batch {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory for per-image JSON reports and errors.log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the aggregate table here instead of stdout.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Profile for entries that do not name one.
        #[arg(long, default_value = "generic")]
        profile: String,
    },
    /// Query the protection model directly.
    #[command(subcommand)]
    Model(ModelCommand),
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Decide one access against an MPU configuration.
    MpuEval {
        config: PathBuf,
        #[arg(long, value_parser = parse_u32)]
        addr: u32,
        #[arg(long, value_enum)]
        access: AccessArg,
        #[arg(long = "priv", value_enum)]
        privilege: PrivArg,
    },
    /// List weaknesses of an MPU configuration.
    MpuAudit { config: PathBuf },
    /// Resolve the security attribution of addresses.
    AttrResolve {
        config: PathBuf,
        #[arg(required = true, value_parser = parse_u32)]
        addrs: Vec<u32>,
    },
    /// Replay a transition script and print each context.
    Transition { script: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum AccessArg {
    Read,
    Write,
    Execute,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrivArg {
    Privileged,
    Unprivileged,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FATAL as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let profiles = || load_profiles(cli.profiles_dir.as_deref());
    match cli.command {
        Command::Analyze {
            file,
            base,
            format,
            profile,
            json,
            alignment,
            detectors,
        } => {
            let profiles = profiles()?;
            let profile = profiles.require(&profile)?;
            let registry = detector_registry(&detectors)?;
            let mut image = load_path(&file, format.as_deref(), &FormatRegistry::default(), &LoadOptions::default())
                .with_context(|| format!("loading {}", file.display()))?;
            if let Some(b) = base {
                image.base = Some(b);
            }
            let m = run_with(&image, profile, &registry, &pipeline_options(alignment));
            print!("{}", summary(&m));
            if let Some(path) = json {
                std::fs::write(&path, to_json(&m)).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(exit::SUCCESS)
        }
        Command::Batch {
            manifest,
            jobs,
            out,
            table,
            profile,
        } => {
            let profiles = profiles()?;
            batch(&manifest, jobs, out.as_deref(), table.as_deref(), &profiles, &profile)
        }
        Command::Model(cmd) => model(cmd),
    }
}

fn load_profiles(dir: Option<&Path>) -> Result<ProfileSet> {
    let mut set = ProfileSet::builtin();
    if let Some(dir) = dir {
        let n = set.load_dir(dir)?;
        log::info!("loaded {n} profile(s) from {}", dir.display());
    }
    Ok(set)
}

fn detector_registry(names: &[String]) -> Result<DetectorRegistry> {
    let registry = DetectorRegistry::default();
    if names.is_empty() {
        return Ok(registry);
    }
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(registry.select(&names)?)
}

fn pipeline_options(alignment: Option<u32>) -> PipelineOptions {
    let mut opts = PipelineOptions::default();
    if let Some(a) = alignment {
        opts.base.alignment = a;
    }
    opts
}

fn summary(m: &FeatureMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "image:   {}", m.image_id);
    let _ = writeln!(s, "profile: {}", m.profile);
    if let Some(d) = &m.device {
        let _ = writeln!(s, "device:  {d}");
    }
    let base = m.base.map_or_else(|| "unknown".to_string(), format_u32);
    let _ = writeln!(s, "base:    {base}");
    for f in Feature::ALL {
        let Some(finding) = m.finding(f) else { continue };
        let first = finding
            .evidence
            .first()
            .map(|e| format!("  [{} {}]", format_u32(e.address), e.note))
            .unwrap_or_default();
        let line = format!("  {:<36} {:<13}{first}", f.title(), finding.verdict.to_string());
        let _ = writeln!(s, "{}", line.trim_end());
    }
    for n in &m.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// File name for an entry's report: the manifest path with separators
/// flattened.
fn report_name(path: &str) -> String {
    let flat: String = path
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{flat}.json")
}

fn batch(
    manifest_path: &Path,
    jobs: usize,
    out: Option<&Path>,
    table: Option<&Path>,
    profiles: &ProfileSet,
    default_profile: &str,
) -> Result<i32> {
    let manifest = CorpusManifest::load(manifest_path)?;
    for e in &manifest.entries {
        let id = e.profile.as_deref().unwrap_or(default_profile);
        profiles.require(id).with_context(|| format!("entry {}", e.path))?;
    }
    let registry = DetectorRegistry::default();
    let formats = FormatRegistry::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<FeatureMatrix, String>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let image = load_entry(&manifest, entry, &formats, &LoadOptions::default())
                    .map_err(|e| format!("{}: {e}", entry.path))?;
                let id = image.metadata.get(META_PROFILE).map_or(default_profile, String::as_str);
                let profile = profiles.require(id).map_err(|e| format!("{}: {e}", entry.path))?;
                let mut m = run_with(&image, profile, &registry, &pipeline_options(entry.alignment));
                m.image_id = entry.path.clone();
                Ok(m)
            })
            .collect()
    });

    let mut errors = Vec::new();
    let mut matrices = Vec::new();
    for r in results {
        match r {
            Ok(m) => matrices.push(m),
            Err(e) => {
                eprintln!("error: {e}");
                errors.push(e);
            }
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for m in &matrices {
            let path = dir.join(report_name(&m.image_id));
            std::fs::write(&path, to_json(m)).with_context(|| format!("writing {}", path.display()))?;
        }
        let mut log = errors.join("\n");
        if !log.is_empty() {
            log.push('\n');
        }
        std::fs::write(dir.join("errors.log"), log).context("writing errors.log")?;
    }
    if matrices.is_empty() {
        bail!("no entry of {} could be analyzed", manifest_path.display());
    }
    let text = to_table(&aggregate(&matrices)?);
    match table {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(if errors.is_empty() { exit::SUCCESS } else { exit::PARTIAL })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn model(cmd: ModelCommand) -> Result<i32> {
    let map = default_memory_map();
    match cmd {
        ModelCommand::MpuEval {
            config,
            addr,
            access,
            privilege,
        } => {
            let cfg = parse_mpu_config(&read(&config)?)?;
            let access = match access {
                AccessArg::Read => Access::Read,
                AccessArg::Write => Access::Write,
                AccessArg::Execute => Access::Execute,
            };
            let privilege = match privilege {
                PrivArg::Privileged => Privilege::Privileged,
                PrivArg::Unprivileged => Privilege::Unprivileged,
            };
            println!("{}", eval_mpu_access(&cfg, &map, addr, privilege, access)?);
        }
        ModelCommand::MpuAudit { config } => {
            let cfg = parse_mpu_config(&read(&config)?)?;
            let issues = audit_mpu_config(&cfg, &map);
            if issues.is_empty() {
                println!("no issues");
            }
            for i in issues {
                match i.at {
                    Some(at) => println!("{:?} at {}", i.kind, format_u32(at)),
                    None => println!("{:?}", i.kind),
                }
            }
        }
        ModelCommand::AttrResolve { config, addrs } => {
            let cfg = parse_attribution_config(&read(&config)?)?;
            for a in addrs {
                println!("{} {}", format_u32(a), resolve_attribution(&cfg, a));
            }
        }
        ModelCommand::Transition { script } => {
            let (mut ctx, events) = parse_transition_script(&read(&script)?)?;
            println!("start {ctx}");
            for (i, ev) in events.into_iter().enumerate() {
                ctx = step_security_context(&ctx, ev).map_err(|e| anyhow!("event {}: {e}", i + 1))?;
                println!("{ev:?} -> {ctx}");
            }
        }
    }
    Ok(exit::SUCCESS)
}
