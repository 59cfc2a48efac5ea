//! The `kexprint` command line.
//!
//! Exit codes: 0 on success, 1 when the work itself failed, 2 for usage or
//! configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{
    estimate_unit_range, Anchor, CalibrationTable, DEFAULT_PERCENTILES, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::detector::{Detector, DetectorConfig, ScanReport, DEFAULT_CONFIDENCE, DEFAULT_WINDOW, DEFAULT_XI};
use crate::entropy::{measure_set_label, parse_measure_set};
use crate::fingerprint::{builtin_fingerprints, parse_fingerprint_file, Fingerprint, MatchResult, Matcher};
use crate::ingest::{
    load_corpus, read_pcap, read_streams, sha256_hex, write_manifest, CorpusEntry, Label, ReassemblyOptions,
    StreamRecord,
};
use crate::synth::{self, CorpusItem, TlsViolation};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the default calibration table.
pub const CALIBRATION_ENV: &str = "KEXPRINT_CALIBRATION";

#[derive(Debug, Parser)]
#[command(name = "kexprint", version, about = "Key-exchange fingerprinting from entropy block layout")]
pub struct Cli {
    /// Worker threads for stream-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo calibration of entropy cutoffs.
    Calibrate(CalibrateArgs),
    /// Label streams and write per-stream reports.
    Scan(ScanArgs),
    /// Match fingerprints against streams and report verdicts.
    Match(MatchArgs),
    /// Estimate the length range of a high-entropy unit over a corpus.
    EstimateRange(EstimateRangeArgs),
    /// Reassemble TCP flows from a capture into stream files.
    Extract(ExtractArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Window sizes in bytes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "32")]
    pub window: Vec<usize>,
    /// Symbol widths, e.g. `1,2,4,8` or `1-4-8`.
    #[arg(long, default_value = "1,2,4,8")]
    pub tau: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    /// Table file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the rendered text table here.
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct DetectorArgs {
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value = "1-4-8")]
    pub measures: String,
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    /// Calibration table; computed on the fly when absent.
    #[arg(long, env = CALIBRATION_ENV)]
    pub calibration: Option<PathBuf>,
    /// Seed for on-the-fly calibration.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct InputArgs {
    /// Labeled corpus manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Stream files; `.pcap` files contribute one stream per TCP flow.
    pub inputs: Vec<PathBuf>,
    /// Only flows touching these ports, for capture inputs.
    #[arg(long, value_delimiter = ',')]
    pub ports: Vec<u16>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Fingerprint files to match while scanning.
    #[arg(long = "fingerprints", short = 'f')]
    pub fingerprints: Vec<PathBuf>,
    /// Directory for per-stream JSON reports.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write per-window CSV next to every report (requires `--out-dir`).
    #[arg(long)]
    pub emit_csv: bool,
    /// Print an ASCII square wave of this many columns per stream.
    #[arg(long)]
    pub wave: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Fingerprint files; the shipped fingerprints when none are given.
    #[arg(long = "fingerprints", short = 'f')]
    pub fingerprints: Vec<PathBuf>,
    /// Restrict to fingerprints with these names.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Write the verdict matrix as TSV.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateRangeArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Random field as `OFFSET:LEN` in bytes.
    #[arg(long)]
    pub anchor: String,
    /// Percentile pair as fractions, e.g. `0.005,0.995`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub percentiles: Option<Vec<f64>>,
    /// Use streams with this label only.
    #[arg(long, default_value = "positive")]
    pub label: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub pcap: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub ports: Vec<u16>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write flows with sequence gaps.
    #[arg(long)]
    pub keep_incomplete: bool,
    /// Label written to the manifest.
    #[arg(long, default_value = "positive")]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Tls,
    TlsViolating,
    Nugache,
    Filler,
    Ascii,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Stream kinds; each contributes `--count` streams.
    #[arg(long, value_enum, required = true)]
    pub kind: Vec<SynthKind>,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Key sizes cycled through for Nugache streams.
    #[arg(long, value_delimiter = ',', default_value = "512,1024,2048")]
    pub key_bits: Vec<usize>,
    /// Length of filler and ASCII streams.
    #[arg(long, default_value_t = 2048)]
    pub len: usize,
    #[arg(long, default_value = "synthetic")]
    pub name: String,
}

/// The effective configuration, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub window: usize,
    pub measures: String,
    pub xi: usize,
    pub confidence: f64,
    pub calibration: Option<PathBuf>,
    pub fingerprints: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl RunConfig {
    fn new(d: &DetectorArgs, fingerprints: &[PathBuf], out_dir: Option<&Path>, workers: Option<usize>) -> Result<(Self, DetectorConfig)> {
        let measures = parse_measure_set(&d.measures)?;
        let config = DetectorConfig {
            window: d.window,
            measures: measures.clone(),
            xi: d.xi,
            confidence: d.confidence,
        };
        config.validate()?;
        if workers == Some(0) {
            return Err(Error::Config("--workers must be positive".into()));
        }
        Ok((
            RunConfig {
                window: d.window,
                measures: measure_set_label(&measures),
                xi: d.xi,
                confidence: d.confidence,
                calibration: d.calibration.clone(),
                fingerprints: fingerprints.to_vec(),
                out_dir: out_dir.map(Path::to_path_buf),
                seed: d.seed,
                workers,
            },
            config,
        ))
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidMeasure(_)
        | Error::WindowTooSmall(_)
        | Error::WindowTooLarge(_)
        | Error::Domain(_)
        | Error::InsufficientSamples { .. }
        | Error::Config(_)
        | Error::Syntax { .. }
        | Error::Validation(_)
        | Error::FingerprintFile { .. }
        | Error::CalibrationTable { .. }
        | Error::Manifest { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let workers = cli.workers;
    pool.install(|| match cli.command {
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Scan(args) => cmd_scan(&args, workers),
        Command::Match(args) => cmd_match(&args, workers),
        Command::EstimateRange(args) => cmd_estimate_range(&args, workers),
        Command::Extract(args) => cmd_extract(&args),
        Command::Synth(args) => cmd_synth(&args),
    })
}

/// Writes through a temporary sibling and a rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<i32> {
    let measures = parse_measure_set(&args.tau)?;
    let table = CalibrationTable::compute(&args.window, &measures, args.samples, args.seed, args.confidence)?;
    let text = table.render_text();
    print!("{text}");
    if let Some(path) = &args.output {
        write_atomic(path, table.to_file_string().as_bytes())?;
    }
    if let Some(path) = &args.text {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn load_table(d: &DetectorArgs, config: &DetectorConfig) -> Result<CalibrationTable> {
    match &d.calibration {
        Some(path) => CalibrationTable::parse(&fs::read_to_string(path)?),
        None => CalibrationTable::compute(&[config.window], &config.measures, DEFAULT_SAMPLES, d.seed, config.confidence),
    }
}

fn load_fingerprints(paths: &[PathBuf]) -> Result<Vec<Fingerprint>> {
    if paths.is_empty() {
        return Ok(builtin_fingerprints());
    }
    let mut out = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path)?;
        let fps = parse_fingerprint_file(&text).map_err(|e| match e {
            Error::FingerprintFile { line, message } => Error::FingerprintFile {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        out.extend(fps);
    }
    Ok(out)
}

struct Inputs {
    streams: Vec<(Option<Label>, StreamRecord)>,
    failures: usize,
    attempted: usize,
}

fn load_inputs(input: &InputArgs) -> Result<Inputs> {
    if input.manifest.is_none() && input.inputs.is_empty() {
        return Err(Error::Config("no streams given; pass files or --manifest".into()));
    }
    let options = ReassemblyOptions {
        ports: (!input.ports.is_empty()).then(|| input.ports.iter().copied().collect()),
        keep_incomplete: false,
    };
    let mut out = Inputs {
        streams: Vec::new(),
        failures: 0,
        attempted: 0,
    };
    if let Some(manifest) = &input.manifest {
        let load = load_corpus(manifest, &options)?;
        out.attempted += load.streams.len() + load.failures.len();
        for failure in &load.failures {
            eprintln!("error: {}: {}", failure.path.display(), failure.message);
        }
        out.failures += load.failures.len();
        out.streams
            .extend(load.streams.into_iter().map(|s| (Some(s.label), s.stream)));
    }
    for path in &input.inputs {
        out.attempted += 1;
        match read_streams(path, &options) {
            Ok(streams) => out.streams.extend(streams.into_iter().map(|s| (None, s))),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                out.failures += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    run: &'a RunConfig,
    #[serde(flatten)]
    report: &'a ScanReport,
}

fn cmd_scan(args: &ScanArgs, workers: Option<usize>) -> Result<i32> {
    let (run, config) = RunConfig::new(&args.detector, &args.fingerprints, args.out_dir.as_deref(), workers)?;
    if args.emit_csv && args.out_dir.is_none() {
        return Err(Error::Config("--emit-csv needs --out-dir".into()));
    }
    let matchers: Vec<Matcher> = if args.fingerprints.is_empty() {
        Vec::new()
    } else {
        load_fingerprints(&args.fingerprints)?.iter().map(Fingerprint::compile).collect()
    };
    let table = load_table(&args.detector, &config)?;
    let detector = Detector::new(config, &table)?;
    let inputs = load_inputs(&args.input)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
    }

    let results: Vec<Result<String>> = inputs
        .streams
        .par_iter()
        .map(|(_, stream)| {
            let report = detector.scan(stream).with_matches(&matchers);
            if let Some(dir) = &args.out_dir {
                let stem = file_stem_for(&stream.id);
                let json = serde_json::to_vec_pretty(&ReportFile { run: &run, report: &report })
                    .expect("report is serializable");
                write_atomic(&dir.join(format!("{stem}.json")), &json)?;
                if args.emit_csv {
                    let mut csv = Vec::new();
                    report.write_csv(&mut csv)?;
                    write_atomic(&dir.join(format!("{stem}.csv")), &csv)?;
                }
            }
            Ok(summary_line(&report, args.wave))
        })
        .collect();

    let mut failures = inputs.failures;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for r in results {
        match r {
            Ok(line) => write!(out, "{line}")?,
            Err(e) => {
                eprintln!("error: {e}");
                failures += 1;
            }
        }
    }
    let scanned = inputs.streams.len() + inputs.failures - failures;
    writeln!(out, "scanned {scanned} stream(s), {failures} failure(s)")?;
    Ok(if inputs.attempted > 0 && scanned == 0 && failures > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn summary_line(report: &ScanReport, wave: Option<usize>) -> String {
    let mut line = format!(
        "{}\t{} bytes\t{} high run(s)",
        report.stream_id,
        report.stream_len,
        report.high_runs().count()
    );
    for m in &report.matches {
        match m.span {
            Some(span) => write!(line, "\t{}: match [{}, {})", m.fingerprint, span.start, span.end).unwrap(),
            None => write!(line, "\t{}: no match", m.fingerprint).unwrap(),
        }
    }
    if let Some(d) = &report.diagnostic {
        write!(line, "\t({d})").unwrap();
    }
    line.push('\n');
    if let Some(width) = wave {
        line.push_str(&report.square_wave(width));
        line.push('\n');
    }
    line
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, label: Label, matched: bool) {
        match (label, matched) {
            (Label::Positive, true) => self.tp += 1,
            (Label::Positive, false) => self.fn_ += 1,
            (Label::Negative, true) => self.fp += 1,
            (Label::Negative, false) => self.tn += 1,
        }
    }

    pub fn recall(&self) -> Option<f64> {
        let p = self.tp + self.fn_;
        (p > 0).then(|| self.tp as f64 / p as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        let p = self.tp + self.fp;
        (p > 0).then(|| self.tp as f64 / p as f64)
    }
}

fn percent(x: Option<f64>) -> String {
    x.map(|v| format!("{:.2}%", v * 100.0)).unwrap_or_else(|| "n/a".into())
}

fn cmd_match(args: &MatchArgs, workers: Option<usize>) -> Result<i32> {
    let (run, config) = RunConfig::new(&args.detector, &args.fingerprints, None, workers)?;
    let mut fingerprints = load_fingerprints(&args.fingerprints)?;
    if !args.only.is_empty() {
        fingerprints.retain(|f| args.only.contains(&f.name));
        if fingerprints.is_empty() {
            return Err(Error::Config(format!("no fingerprint named {}", args.only.join(", "))));
        }
    }
    let matchers: Vec<Matcher> = fingerprints.iter().map(Fingerprint::compile).collect();
    let inputs = load_inputs(&args.input)?;
    let table = load_table(&args.detector, &config)?;
    let detector = Detector::new(config, &table)?;

    let verdicts: Vec<Vec<MatchResult>> = inputs
        .streams
        .par_iter()
        .map(|(_, s)| detector.scan(s).with_matches(&matchers).matches)
        .collect();

    let mut tsv = String::from("stream\tlabel");
    for m in &matchers {
        write!(tsv, "\t{}", m.name()).unwrap();
    }
    tsv.push('\n');
    let mut confusion = vec![Confusion::default(); matchers.len()];
    let mut labeled = false;
    for ((label, stream), row) in inputs.streams.iter().zip(&verdicts) {
        write!(tsv, "{}\t{}", stream.id, label.map(|l| l.to_string()).unwrap_or_else(|| "-".into())).unwrap();
        for (i, v) in row.iter().enumerate() {
            tsv.push_str(if v.matched { "\t1" } else { "\t0" });
            if let Some(label) = label {
                confusion[i].add(*label, v.matched);
                labeled = true;
            }
        }
        tsv.push('\n');
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    write!(out, "{tsv}")?;
    if labeled {
        writeln!(out, "\nfingerprint\tTP\tFN\tFP\tTN\trecall\tprecision")?;
        for (m, c) in matchers.iter().zip(&confusion) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.name(),
                c.tp,
                c.fn_,
                c.fp,
                c.tn,
                percent(c.recall()),
                percent(c.precision())
            )?;
        }
    }
    writeln!(out, "# {}", serde_json::to_string(&run).expect("run config is serializable"))?;
    if let Some(path) = &args.output {
        write_atomic(path, tsv.as_bytes())?;
    }
    Ok(if inputs.attempted > 0 && inputs.streams.is_empty() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

pub fn parse_anchor(text: &str) -> Result<Anchor> {
    let bad = || Error::Config(format!("anchor `{text}` is not OFFSET:LEN"));
    let (offset, len) = text.split_once(':').ok_or_else(bad)?;
    let anchor = Anchor {
        offset: offset.trim().parse().map_err(|_| bad())?,
        len: len.trim().parse().map_err(|_| bad())?,
    };
    if anchor.len == 0 {
        return Err(bad());
    }
    Ok(anchor)
}

fn cmd_estimate_range(args: &EstimateRangeArgs, workers: Option<usize>) -> Result<i32> {
    let (run, config) = RunConfig::new(&args.detector, &[], None, workers)?;
    let anchor = parse_anchor(&args.anchor)?;
    let label: Label = args.label.parse().map_err(Error::Config)?;
    let percentiles = match args.percentiles.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        _ => DEFAULT_PERCENTILES,
    };
    let table = load_table(&args.detector, &config)?;
    let detector = Detector::new(config, &table)?;
    let load = load_corpus(&args.manifest, &ReassemblyOptions::default())?;
    for failure in &load.failures {
        eprintln!("error: {}: {}", failure.path.display(), failure.message);
    }
    let labels: Vec<_> = load
        .streams
        .par_iter()
        .filter(|s| s.label == label)
        .map(|s| detector.scan(&s.stream).filtered)
        .collect();
    let estimate = estimate_unit_range(&labels, anchor, percentiles)?;
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            run: &'a RunConfig,
            estimate: &'a crate::calibration::UnitRangeEstimate,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Out { run: &run, estimate: &estimate }).expect("serializable")
        );
    } else {
        println!(
            "anchor {}:{} over {} stream(s), {} miss(es)",
            anchor.offset, anchor.len, estimate.corpus_size, estimate.misses
        );
        println!("observed [{}, {}]", estimate.observed_min, estimate.observed_max);
        println!(
            "range [{}, {}] at percentiles {}..{}",
            estimate.lo, estimate.hi, estimate.percentile_lo, estimate.percentile_hi
        );
    }
    Ok(EXIT_OK)
}

fn cmd_extract(args: &ExtractArgs) -> Result<i32> {
    let label: Label = args.label.parse().map_err(Error::Config)?;
    let options = ReassemblyOptions {
        ports: (!args.ports.is_empty()).then(|| args.ports.iter().copied().collect()),
        keep_incomplete: args.keep_incomplete,
    };
    let (reassembly, warnings) = read_pcap(&args.pcap, &options)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let streams_dir = args.out_dir.join("streams");
    fs::create_dir_all(&streams_dir)?;
    let mut entries = Vec::new();
    for stream in &reassembly.streams {
        let rel = PathBuf::from("streams").join(format!("{}.bin", file_stem_for(&stream.id)));
        write_atomic(&args.out_dir.join(&rel), &stream.payload)?;
        entries.push(CorpusEntry {
            label,
            sha256: sha256_hex(&stream.payload),
            path: rel,
            tags: Vec::new(),
        });
    }
    let name = args.pcap.file_name().map(|n| n.to_string_lossy().into_owned());
    write_atomic(
        &args.out_dir.join("manifest.tsv"),
        write_manifest(name.as_deref(), &entries).as_bytes(),
    )?;
    let s = &reassembly.stats;
    println!("wrote {} stream(s) to {}", entries.len(), args.out_dir.display());
    println!(
        "frames {} | flows {} | filtered {} | non-ipv4 {} | non-tcp {} | fragments {} | malformed {} | incomplete {} | inconsistent {} | retransmissions {} | without syn {}",
        s.frames,
        s.flows,
        s.filtered_out,
        s.non_ipv4,
        s.non_tcp,
        s.fragments,
        s.malformed,
        s.incomplete,
        s.inconsistent,
        s.retransmissions,
        s.without_syn
    );
    Ok(EXIT_OK)
}

fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    if args.key_bits.is_empty() {
        return Err(Error::Config("--key-bits needs at least one size".into()));
    }
    let mut items = Vec::new();
    for &kind in &args.kind {
        for i in 0..args.count {
            let seed = args.seed + i as u64;
            let (label, tag, (stream, truth)) = match kind {
                SynthKind::Tls => (Label::Positive, "tls", synth::gen_tls_like(seed)),
                SynthKind::TlsViolating => {
                    let v = [
                        TlsViolation::ClientRandom,
                        TlsViolation::FirstGap,
                        TlsViolation::ServerRandom,
                        TlsViolation::SecondGap,
                    ][i % 4];
                    (Label::Negative, "tls-violating", synth::gen_tls_violating(seed, v))
                }
                SynthKind::Nugache => {
                    let bits = args.key_bits[i % args.key_bits.len()];
                    (Label::Positive, "nugache", synth::gen_nugache_like(seed, bits)?)
                }
                SynthKind::Filler => (Label::Negative, "filler", synth::gen_filler(seed, args.len)),
                SynthKind::Ascii => (Label::Negative, "ascii", synth::gen_ascii_text(seed, args.len)),
            };
            items.push(CorpusItem {
                label,
                tags: vec![tag.to_string()],
                stream,
                truth,
            });
        }
    }
    let manifest = synth::write_corpus(&args.out_dir, &args.name, &items)?;
    println!("wrote {} stream(s); manifest {}", items.len(), manifest.display());
    Ok(EXIT_OK)
}
