use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use swatrack::appearance::BoundingBox;
use swatrack::config::{RunConfig, TrackerKind};
use swatrack::eval::{average, evaluate_all, EvalReport};
use swatrack::frame_io::{self, SequenceManifest};
use swatrack::synth::{self, suites, SceneSpec};
use swatrack::tracker::TrackRecord;
use swatrack::{study, Error, Result};

#[derive(Parser)]
#[command(name = "swatrack", version, about = "Swarm-based abrupt-motion tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackerArg {
    Swatrack,
    PsoFixed,
    Pf,
}

impl From<TrackerArg> for TrackerKind {
    fn from(t: TrackerArg) -> Self {
        match t {
            TrackerArg::Swatrack => TrackerKind::Swatrack,
            TrackerArg::PsoFixed => TrackerKind::PsoFixed,
            TrackerArg::Pf => TrackerKind::Pf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Teleport,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Samples,
    Downsample,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene spec (JSON or TOML) or a built-in suite to PPM frames and gt.csv.
    Synth {
        /// Scene spec file.
        #[arg(long, conflicts_with = "suite")]
        spec: Option<PathBuf>,
        /// Built-in suite instead of a spec file. `mixed` writes one
        /// sub-directory per scene.
        #[arg(long)]
        suite: Option<SuiteArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        /// Keep one frame in every k.
        #[arg(long, default_value_t = 1)]
        keep_every: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track targets through a sequence directory.
    Track {
        /// Directory of frame_NNNNNN.ppm files.
        seq: PathBuf,
        #[arg(long, value_enum, default_value = "swatrack")]
        tracker: TrackerArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for track_target<N>.csv files.
        #[arg(long)]
        out: PathBuf,
        /// Initial box `x,y,w,h`; repeat for several targets. Defaults to the
        /// frame-0 rows of the sequence's gt.csv.
        #[arg(long, value_parser = parse_box)]
        init: Vec<BoundingBox>,
        /// Score against the sequence's gt.csv and write report files.
        #[arg(long)]
        eval: bool,
        /// Write measured milliseconds into output files.
        #[arg(long)]
        timing: bool,
    },
    /// Score track CSVs against a ground-truth CSV.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        tracks: Vec<PathBuf>,
        #[arg(long)]
        gt: PathBuf,
        /// Directory for report.json and report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded sweep over particle counts or frame-rate reduction.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Long-form CSV output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

fn parse_box(s: &str) -> std::result::Result<BoundingBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [x, y, w, h] = v[..] else {
        return Err("expected x,y,w,h".into());
    };
    BoundingBox::new(x, y, w, h).map_err(|e| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn load_spec(path: &Path) -> Result<SceneSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn render(spec: &SceneSpec, keep_every: usize, out: &Path) -> Result<()> {
    let (frames, gt) = synth::generate(spec)?;
    let (frames, gt) = synth::downsample(frames, &gt, keep_every)?;
    frame_io::write_sequence(out, &frames, &gt)?;
    eprintln!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}

fn cmd_synth(
    spec: Option<PathBuf>,
    suite: Option<SuiteArg>,
    seed: u64,
    frames: usize,
    keep_every: usize,
    out: &Path,
) -> Result<()> {
    match (spec, suite) {
        (Some(path), _) => render(&load_spec(&path)?, keep_every, out),
        (None, Some(SuiteArg::Teleport)) => render(&suites::teleport(seed, frames, frames / 2, 150.0), keep_every, out),
        (None, Some(SuiteArg::Mixed)) => {
            let names = ["smooth", "erratic", "switch", "textured", "fast"];
            for (name, spec) in names.iter().zip(suites::mixed(seed, frames)) {
                render(&spec, keep_every, &out.join(name))?;
            }
            Ok(())
        }
        (None, None) => Err(Error::Config("one of --spec or --suite is required".into())),
    }
}

fn report_csv(reports: &[EvalReport], timing: bool) -> String {
    let mut out = String::from("target,frames,detection_rate_pct,mean_ms_per_frame,mean_evaluations_per_frame\n");
    let ms = |v: f64| if timing { v } else { 0.0 };
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            r.target,
            r.per_frame.len(),
            r.detection_rate_pct,
            ms(r.mean_ms_per_frame),
            r.mean_evaluations_per_frame
        ));
    }
    let (rate, mean_ms) = average(reports);
    let evals = reports.iter().map(|r| r.mean_evaluations_per_frame).sum::<f64>() / reports.len() as f64;
    let frames: usize = reports.iter().map(|r| r.per_frame.len()).sum();
    out.push_str(&format!("Average,{frames},{rate:.6},{:.6},{evals:.6}\n", ms(mean_ms)));
    out
}

fn report_json(reports: &[EvalReport], timing: bool) -> String {
    let mut reports = reports.to_vec();
    if !timing {
        reports.iter_mut().for_each(|r| r.mean_ms_per_frame = 0.0);
    }
    let (rate, ms) = average(&reports);
    let doc = serde_json::json!({
        "targets": reports,
        "average": { "detection_rate_pct": rate, "mean_ms_per_frame": ms },
    });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

fn print_reports(reports: &[EvalReport]) {
    eprintln!("{:>8} {:>8} {:>10} {:>10}", "target", "frames", "rate %", "ms/frame");
    for r in reports {
        eprintln!(
            "{:>8} {:>8} {:>10.2} {:>10.3}",
            r.target,
            r.per_frame.len(),
            r.detection_rate_pct,
            r.mean_ms_per_frame
        );
    }
    let (rate, ms) = average(reports);
    eprintln!("{:>8} {:>8} {:>10.2} {:>10.3}", "Average", "", rate, ms);
}

fn write_reports(dir: &Path, reports: &[EvalReport], timing: bool) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("report.json"), report_json(reports, timing))?;
    write(&dir.join("report.csv"), report_csv(reports, timing))
}

#[allow(clippy::too_many_arguments)]
fn cmd_track(
    seq: &Path,
    tracker: TrackerKind,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    init: Vec<BoundingBox>,
    eval: bool,
    timing: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    let timing = timing || cfg.eval.timing;
    let manifest = SequenceManifest::open(seq)?;
    let gt = manifest.load_ground_truth()?;
    if eval && gt.is_none() {
        return Err(Error::Config(format!("--eval needs {}", seq.join("gt.csv").display())));
    }
    let init = if init.is_empty() {
        match &gt {
            Some(gt) if !gt.boxes_at(0).is_empty() => gt.boxes_at(0),
            _ => return Err(Error::Config("no --init box and no frame-0 ground truth".into())),
        }
    } else {
        init
    };

    eprintln!(
        "tracking {} target(s) over {} frames with {}",
        init.len(),
        manifest.frames.len(),
        tracker.name()
    );
    let frames = manifest.load_frames().collect::<Result<Vec<_>>>()?;
    let records = study::run_tracker(tracker, &frames, &init, &cfg)?;

    create_dir(out)?;
    for (t, recs) in records.iter().enumerate() {
        let lost = recs.iter().filter(|r| r.lost).count();
        eprintln!("target {t}: {} frames, {lost} flagged lost", recs.len());
        write(&out.join(format!("track_target{t}.csv")), frame_io::write_track_csv(recs, timing))?;
    }
    if eval {
        let all: Vec<TrackRecord> = records.concat();
        let reports = evaluate_all(&all, gt.as_ref().expect("checked above"))?;
        print_reports(&reports);
        write_reports(out, &reports, timing)?;
    }
    Ok(())
}

fn cmd_eval(tracks: &[PathBuf], gt: &Path, out: Option<&Path>) -> Result<()> {
    let gt = frame_io::load_gt(gt)?;
    let mut records = Vec::new();
    for path in tracks {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        records.extend(frame_io::read_track_csv(&text)?);
    }
    let reports = evaluate_all(&records, &gt)?;
    print_reports(&reports);
    // Times come from the files, so they are written as read.
    match out {
        Some(dir) => write_reports(dir, &reports, true),
        None => {
            print!("{}", report_csv(&reports, true));
            Ok(())
        }
    }
}

fn cmd_study(kind: StudyKind, config: Option<&Path>, out: &Path, timing: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let timing = timing || cfg.eval.timing;
    let rows = match kind {
        StudyKind::Samples => study::samples_study(&cfg)?,
        StudyKind::Downsample => study::downsample_study(&cfg)?,
    };
    for r in &rows {
        eprintln!(
            "{:<10} N={:<4} k={:<2} accuracy {:6.2} ± {:5.2}  evals/frame {:8.1}  ms/frame {:7.3}",
            r.tracker.name(),
            r.particles,
            r.keep_every,
            r.accuracy_mean,
            r.accuracy_sd,
            r.evals_mean,
            r.ms_mean
        );
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write(out, study::write_study_csv(&rows, timing))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            spec,
            suite,
            seed,
            frames,
            keep_every,
            out,
        } => cmd_synth(spec, suite, seed, frames, keep_every, &out),
        Command::Track {
            seq,
            tracker,
            config,
            seed,
            out,
            init,
            eval,
            timing,
        } => cmd_track(&seq, tracker.into(), config.as_deref(), seed, &out, init, eval, timing),
        Command::Eval { tracks, gt, out } => cmd_eval(&tracks, &gt, out.as_deref()),
        Command::Study {
            kind,
            config,
            out,
            timing,
        } => cmd_study(kind, config.as_deref(), &out, timing),
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
