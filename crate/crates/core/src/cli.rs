//! The `puf-spectra` command line: `theory`, `simulate`, `spectra` and `compare`.
//!
//! Exit codes: 0 pass, 1 fail verdict (or oracle disagreement), 2 usage or
//! configuration error, 3 data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::boolean::theory::{self, MAX_EXHAUSTIVE_VARS};
use crate::config::RunConfig;
use crate::crp::{read_crp, write_crp, CrpFile, CrpHeader};
use crate::error::{Error, Result};
use crate::plot::{cumulative_t_svg, histogram_svg};
use crate::sim::{collect_responses, generate_population, ChallengeSet, FaultSpec, RESPONSE_BITS};
use crate::spectra::{build_spectrum, CorrelationSpectrum, PairMode};
use crate::stats::{calibrated_kl0, compare_spectra, null_model_kl, uniformity, SpectrumComparisonReport, TValue, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "puf-spectra", version, about = "Correlation-spectra testing of PUF populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact lattice spectrum of all m-variable Boolean functions, cross-checked by enumeration for m <= 4.
    Theory(Opts),
    /// Simulate a 5-4 DAPUF population and dump its CRPs, plus a faulted twin when --fault is given.
    Simulate(Opts),
    /// Per-bit correlation spectra of a CRP dump: CSV tables and SVG histograms.
    Spectra {
        /// CRP dump to analyze.
        input: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compare a suspect population against a reference one; exits 1 if any bit fails.
    Compare {
        /// Reference (known good) CRP dump.
        correct: PathBuf,
        /// Suspect CRP dump over the same challenges.
        faulty: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Debug, Args)]
struct Opts {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    challenges: Option<usize>,
    /// Measurements per challenge for majority voting (odd).
    #[arg(long)]
    measurements: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// stage:chains:value[:site], 1-based stage and chains, e.g. 10:all:1.
    #[arg(long)]
    fault: Option<String>,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    /// KL threshold; calibrated from the reference population when omitted.
    #[arg(long)]
    kl0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    delay_sigma: Option<f64>,
    #[arg(long)]
    layout_sigma: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        overlay!(
            m => m, instances => instances, challenges => challenges, measurements => measurements,
            seed => seed, buckets => buckets, segments => segments, t0 => t0, epsilon => epsilon,
            stages => n_stages, delay_sigma => delay_sigma, layout_sigma => layout_sigma,
            noise_sigma => noise_sigma
        );
        if let Some(kl0) = self.kl0 {
            c.kl0 = Some(kl0);
        }
        if let Some(f) = &self.fault {
            c.fault = Some(f.parse::<FaultSpec>()?);
        }
        Ok(c)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { EXIT_PASS } else { EXIT_USAGE };
        }
    };
    let result = match &cli.command {
        Command::Theory(o) => o.resolve().and_then(|c| theory_cmd(&c, &o.out, stdout)),
        Command::Simulate(o) => o.resolve().and_then(|c| simulate_cmd(&c, &o.out, stdout)),
        Command::Spectra { input, opts } => opts.resolve().and_then(|c| spectra_cmd(&c, input, &opts.out, stdout)),
        Command::Compare { correct, faulty, opts } => {
            opts.resolve().and_then(|c| compare_cmd(&c, correct, faulty, &opts.out, stdout))
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

/// Writes through a temporary file in the same directory, then renames into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

fn echo_line(cfg: &RunConfig) -> String {
    format!("# config {}", cfg.echo())
}

fn theory_cmd(cfg: &RunConfig, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    cfg.validate_theory()?;
    let m = cfg.m;
    let mut rows = theory::lattice_table(m)?;
    rows.reverse();
    let mut csv = format!("{}\ncoefficient,mismatches,pair_count,probability\n", echo_line(cfg));
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.coefficient, r.mismatches, r.pair_count, r.probability));
    }
    let mut code = EXIT_PASS;
    let oracle = if m <= MAX_EXHAUSTIVE_VARS {
        let exhaustive = theory::enumerate_exhaustive_spectrum(m)?;
        let bad: Vec<u64> = rows
            .iter()
            .filter(|r| r.pair_count != exhaustive.counts[r.mismatches as usize].into())
            .map(|r| r.mismatches)
            .collect();
        if bad.is_empty() {
            format!("# oracle: enumeration of all ordered pairs agrees on all {} lattice points", rows.len())
        } else {
            code = EXIT_FAIL;
            format!("# oracle: MISMATCH at mismatch counts {bad:?}")
        }
    } else {
        format!("# oracle: skipped (enumeration limited to m <= {MAX_EXHAUSTIVE_VARS})")
    };
    csv.push_str(&oracle);
    csv.push('\n');
    out.write_all(csv.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    write_atomic(&out_dir.join(format!("theory_m{m}.csv")), &csv)?;
    Ok(code)
}

fn simulate_cmd(cfg: &RunConfig, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    cfg.validate_simulation()?;
    let params = cfg.params();
    let population = generate_population(&params, cfg.instances)?;
    let challenges = ChallengeSet::random(params.n_stages, cfg.challenges, params.seed)?;
    let echo = vec![format!("config {}", cfg.echo())];

    let correct = collect_responses(&population, &challenges, cfg.measurements)?;
    let header = CrpHeader::new(&params, cfg.measurements, None);
    write_atomic(&out_dir.join("correct.crp"), &write_crp(&correct, &header, &echo))?;
    say(out, format!("correct.crp: {} instances x {} challenges", cfg.instances, cfg.challenges))?;
    report_uniformity(out, "correct", &correct)?;

    if let Some(fault) = &cfg.fault {
        let faulted = population
            .iter()
            .map(|inst| inst.inject_fault(fault))
            .collect::<Result<Vec<_>>>()?;
        let faulty = collect_responses(&faulted, &challenges, cfg.measurements)?;
        let header = CrpHeader::new(&params, cfg.measurements, Some(fault));
        write_atomic(&out_dir.join("faulty.crp"), &write_crp(&faulty, &header, &echo))?;
        say(out, format!("faulty.crp: same instances with fault {fault}"))?;
        report_uniformity(out, "faulty", &faulty)?;
    }
    Ok(EXIT_PASS)
}

fn report_uniformity(out: &mut dyn Write, label: &str, table: &crate::sim::ResponseTable) -> Result<()> {
    let mut parts = Vec::new();
    for b in 1..=RESPONSE_BITS {
        let v = table.bit_vectors(b)?;
        let mean = v.iter().map(uniformity).sum::<Result<f64>>()? / v.len() as f64;
        parts.push(format!("bit{b} {mean:.2}%"));
    }
    say(out, format!("  {label} mean uniformity: {}", parts.join(", ")))
}

fn spectra_for(file: &CrpFile, buckets: usize) -> Result<Vec<CorrelationSpectrum>> {
    (1..=RESPONSE_BITS)
        .map(|b| build_spectrum(&file.table.bit_vectors(b)?, buckets, PairMode::UnorderedDistinct))
        .collect()
}

fn with_preamble(cfg: &RunConfig, input: &CrpFile, body: &str) -> String {
    let mut s = echo_line(cfg);
    s.push('\n');
    if let Some(h) = &input.header_line {
        s.push_str(&format!("# input {}\n", h.trim_start_matches('#').trim()));
    }
    s.push_str(body);
    s
}

fn spectra_cmd(cfg: &RunConfig, input: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    cfg.validate_spectra()?;
    let file = read_crp(input)?;
    let spectra = spectra_for(&file, cfg.buckets)?;
    for (b, s) in (1..=RESPONSE_BITS).zip(&spectra) {
        write_atomic(&out_dir.join(format!("spectrum_bit{b}.csv")), &with_preamble(cfg, &file, &s.to_csv()))?;
        write_atomic(&out_dir.join(format!("raw_bit{b}.csv")), &with_preamble(cfg, &file, &s.raw_csv()))?;
        let title = format!("Correlation spectrum, response bit {b} ({} pairs)", s.total());
        write_atomic(&out_dir.join(format!("spectrum_bit{b}.svg")), &histogram_svg(s, &title, &cfg.echo()))?;
        say(
            out,
            format!(
                "bit {b}: {} pairs, mean {:.4}, median {:.4}",
                s.total(),
                s.mean_coefficient(),
                s.median_coefficient()
            ),
        )?;
    }
    Ok(EXIT_PASS)
}

fn t_cell(t: Option<TValue>) -> String {
    t.map_or(String::new(), |t| t.value().to_string())
}

fn compare_cmd(cfg: &RunConfig, correct: &Path, faulty: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    cfg.validate_compare()?;
    let reference = read_crp(correct)?;
    let suspect = read_crp(faulty)?;
    if reference.table.challenges().id() != suspect.table.challenges().id() {
        return Err(Error::Incomparable(format!(
            "{} and {} were evaluated on different challenge sets",
            correct.display(),
            faulty.display()
        )));
    }
    let p = spectra_for(&reference, cfg.buckets)?;
    let q = spectra_for(&suspect, cfg.buckets)?;

    let mut bits = Vec::new();
    let mut null_kl = Vec::new();
    for b in 1..=RESPONSE_BITS {
        let ref_vectors = reference.table.bit_vectors(b)?;
        let kl0 = calibrated_kl0(&ref_vectors, cfg.buckets, cfg.epsilon)?;
        null_kl.push(json!({
            "bit": b,
            "null_kl": null_model_kl(&ref_vectors, cfg.buckets, cfg.epsilon)?,
        }));
        bits.push(compare_spectra(&q[b - 1], &p[b - 1], &cfg.thresholds(kl0))?);
    }
    let report = SpectrumComparisonReport { bits };

    let mut doc = serde_json::to_value(&report).expect("report serializes");
    let obj = doc.as_object_mut().expect("report is an object");
    obj.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    obj.insert("kl0_calibration".into(), Value::Array(null_kl));
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    write_atomic(&out_dir.join("report.json"), &text)?;

    let mut csv = format!("{}\nbit,segment,segment_lo,segment_hi,segment_t,cumulative_t\n", echo_line(cfg));
    for bc in &report.bits {
        let n = bc.cumulative_t.len();
        for k in 0..n {
            let lo = -1.0 + 2.0 * k as f64 / n as f64;
            let hi = -1.0 + 2.0 * (k + 1) as f64 / n as f64;
            csv.push_str(&format!(
                "{},{},{lo},{hi},{},{}\n",
                bc.bit.map_or(String::new(), |b| b.to_string()),
                k + 1,
                t_cell(bc.segment_t[k]),
                t_cell(bc.cumulative_t[k])
            ));
        }
    }
    write_atomic(&out_dir.join("cumulative_t.csv"), &csv)?;

    for (b, bc) in (1..=RESPONSE_BITS).zip(&report.bits) {
        let title = format!("Cumulative t over correlation segments, response bit {b}");
        let svg = cumulative_t_svg(&bc.cumulative_t, bc.thresholds.t0, &title, &cfg.echo());
        write_atomic(&out_dir.join(format!("cumulative_t_bit{b}.svg")), &svg)?;
        let verdict = match bc.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
        };
        say(
            out,
            format!(
                "bit {b}: final t = {}, KL = {:.4} (kl0 = {:.4}), median {:.4} vs {:.4}: {verdict}",
                bc.final_t().map_or("undefined".to_string(), |t| format!("{:.3}", t.value())),
                bc.kl_divergence,
                bc.thresholds.kl0,
                bc.median_test,
                bc.median_reference
            ),
        )?;
    }
    let overall = report.verdict();
    say(out, format!("verdict: {}", if overall == Verdict::Pass { "pass" } else { "FAIL" }))?;
    Ok(if overall == Verdict::Pass { EXIT_PASS } else { EXIT_FAIL })
}
