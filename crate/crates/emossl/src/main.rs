use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use emossl_core::acoustic::{FormantConfig, PitchConfig};
use emossl_core::dsp::{mel_cepstra, MelCepstrumConfig};
use emossl_core::emotion::{
    build_style_vector, cartesian_to_spherical, interpolate, scale_intensity, spherical_to_cartesian, AvdVector,
    SphericalEmotion,
};
use emossl_core::vq::{kmeans_fit, KMeansConfig, DEFAULT_K, DEFAULT_MAX_ITERS, DEFAULT_N_INIT};
use emossl_core::{FeatureMatrix, FeatureSource};
use emossl::emoc::{load_codebook, save_codebook};
use emossl::emof::{read_features, write_features};
use emossl::evaluate::{evaluate, EvalOptions};
use emossl::export::{formant_csv, formant_medians, pitch_csv, Batch};
use emossl::manifest::{parse_manifest, EvalManifest, PathKind};
use emossl::report::Metric;
use emossl::tokens::format_tokens;
use emossl::wav::read_wav;
use rayon::prelude::*;

/// Emotion-space math, speech tokenization and objective evaluation.
#[derive(Parser)]
#[command(name = "emossl", version)]
struct Cli {
    /// Worker threads for per-utterance work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute mel-cepstra for every WAV in a manifest and write EMOF files.
    Extract(ExtractArgs),
    /// Fit a k-means codebook on feature files.
    FitCodebook(FitArgs),
    /// Turn feature files into token sequences with a codebook.
    Tokenize(TokenizeArgs),
    /// Score a manifest and write a JSONL report plus rendered tables.
    Evaluate(EvaluateArgs),
    /// Export F0 tracks as CSV.
    Pitch(ExportArgs),
    /// Export F1-F3 per voiced frame as CSV and print per-utterance medians.
    Formants(FormantArgs),
    /// Emotion-space transforms on whitespace- or comma-separated triples from stdin.
    Emotion(EmotionArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureKind {
    MelCepstrum,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; files are named `<utt_id>.emof`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "mel-cepstrum")]
    kind: FeatureKind,
    /// Rewrite files that already exist.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Glob selecting EMOF files, e.g. `feats/*.emof`.
    #[arg(long)]
    features: String,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Language tag stored in the codebook.
    #[arg(long, default_value = "")]
    lang: String,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Independent seedings; the lowest-inertia run is kept.
    #[arg(long, default_value_t = DEFAULT_N_INIT)]
    n_init: usize,
    /// Scale every frame to unit length before clustering.
    #[arg(long)]
    l2_normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TokenizeArgs {
    #[arg(long)]
    codebook: PathBuf,
    /// Glob selecting EMOF files; utterance ids are the file stems.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    features: Option<String>,
    /// Tokenize the SSL features of each manifest record instead.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory of `<utt_id>.emof` files used with `--manifest`.
    #[arg(long)]
    ssl_dir: Option<PathBuf>,
    #[arg(long)]
    l2_normalize: bool,
    /// Output token file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct MetricList(Vec<Metric>);

fn parse_metrics(s: &str) -> Result<MetricList, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m = Metric::parse(part).ok_or_else(|| {
            format!("unknown metric `{part}` (expected wer, cer, bertscore, bleu, tokendist, mcd, logf0, avd)")
        })?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no metrics given".into());
    }
    Ok(MetricList(out))
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Codebook for SpeechBLEU and SpeechTokenDist.
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Comma-separated subset of wer,bertscore,bleu,tokendist,mcd,logf0,avd.
    #[arg(long, value_parser = parse_metrics)]
    metrics: Option<MetricList>,
    /// JSONL report path; the rendered table goes next to it with a `.txt` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ssl_dir: Option<PathBuf>,
    /// Row label in the rendered tables.
    #[arg(long, default_value = "system")]
    system: String,
    #[arg(long, default_value_t = emossl_core::sequence::DEFAULT_BLEU_MAX_N as u64,
          value_parser = clap::value_parser!(u64).range(1..=4))]
    bleu_max_n: u64,
    /// Include c0 in MCD.
    #[arg(long)]
    use_c0: bool,
    #[arg(long)]
    l2_normalize: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FormantArgs {
    #[command(flatten)]
    export: ExportArgs,
    /// LPC order (default: sample rate in kHz + 2, at most 16).
    #[arg(long)]
    lpc_order: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmotionOp {
    /// `a v d` -> `r theta phi`
    ToSpherical,
    /// `r theta phi` -> `a v d`
    ToCartesian,
    /// `r theta phi r theta phi` -> point at fraction `--t` along the way
    Interpolate,
    /// `r theta phi` -> radius multiplied by `--k`
    Scale,
    /// `r theta phi` -> `r theta phi` followed by the one-hot class vector
    Style,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = numbers(s).map_err(|e| e.to_string())?;
    v.try_into().map_err(|_| format!("expected three comma-separated numbers, got `{s}`"))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match numbers(s).map_err(|e| e.to_string())?[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(format!("expected `lo,hi`, got `{s}`")),
    }
}

#[derive(Args)]
struct EmotionArgs {
    #[arg(value_enum)]
    op: EmotionOp,
    /// Neutral reference point `a,v,d`.
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0", allow_hyphen_values = true)]
    center: [f64; 3],
    /// Map inputs from `[lo, hi]` onto the unit cube before converting.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    rescale: Option<(f64, f64)>,
    /// Interpolation fraction.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    t: f64,
    /// Intensity multiplier.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    k: f64,
    /// Emotion class index for `style`.
    #[arg(long, default_value_t = 0)]
    class: usize,
    /// Number of emotion classes for `style`.
    #[arg(long, default_value_t = 4)]
    classes: usize,
}

/// A failure caused by how the tool was invoked rather than by the data.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(if e.is::<Usage>() { 1 } else { 2 })
        }
    }
}

/// The error chain, skipping causes whose text is already in the message.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting the thread pool")?;
    }
    match cli.command {
        Command::Extract(a) => extract(a),
        Command::FitCodebook(a) => fit_codebook(a),
        Command::Tokenize(a) => tokenize(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Pitch(a) => pitch(a),
        Command::Formants(a) => formants_cmd(a),
        Command::Emotion(a) => emotion(a),
    }
}

fn load_manifest(path: &Path) -> anyhow::Result<EvalManifest> {
    Ok(parse_manifest(path)?)
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

/// Report per-utterance failures; fail the command if there were any.
fn finish_batch(failures: Vec<emossl::Error>, what: &str) -> anyhow::Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        log::error!("{f}");
    }
    bail!("{} utterance(s) failed during {what}", failures.len())
}

fn extract(a: ExtractArgs) -> anyhow::Result<()> {
    let FeatureKind::MelCepstrum = a.kind;
    let manifest = load_manifest(&a.manifest)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let cfg = MelCepstrumConfig::default();
    let results: Vec<(String, anyhow::Result<bool>)> = manifest
        .records
        .par_iter()
        .filter(|r| r.path_kind() == Some(PathKind::Audio))
        .map(|r| {
            let target = a.out.join(format!("{}.emof", r.utt_id));
            let work = || -> anyhow::Result<bool> {
                if target.exists() && !a.force {
                    return Ok(false);
                }
                let w = read_wav(r.path.as_ref().expect("audio path"))?;
                write_features(&target, &mel_cepstra(&w, &cfg)?)?;
                Ok(true)
            };
            (r.utt_id.clone(), work())
        })
        .collect();
    let (mut written, mut kept, mut failed) = (0, 0, 0);
    for (id, res) in results {
        match res {
            Ok(true) => written += 1,
            Ok(false) => kept += 1,
            Err(e) => {
                failed += 1;
                log::error!("utterance `{id}`: {}", describe(&e));
            }
        }
    }
    let skipped = manifest.records.iter().filter(|r| r.path_kind() != Some(PathKind::Audio)).count();
    if skipped > 0 {
        log::info!("{skipped} record(s) without a WAV path were skipped");
    }
    println!("wrote {written}, kept {kept} existing, failed {failed}");
    if failed > 0 {
        bail!("{failed} utterance(s) failed during extraction");
    }
    Ok(())
}

fn glob_paths(pattern: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| usage(format!("bad glob `{pattern}`: {e}")))?
        .collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no files match `{pattern}`");
    }
    Ok(paths)
}

fn load_all(paths: &[PathBuf], l2: bool) -> anyhow::Result<Vec<FeatureMatrix>> {
    paths
        .par_iter()
        .map(|p| {
            let m = read_features(p)?;
            Ok(if l2 { m.l2_normalized() } else { m })
        })
        .collect()
}

fn fit_codebook(a: FitArgs) -> anyhow::Result<()> {
    if a.k == 0 || a.n_init == 0 {
        return Err(usage("--k and --n-init must be at least 1"));
    }
    let paths = glob_paths(&a.features)?;
    let data = load_all(&paths, a.l2_normalize)?;
    let views: Vec<&FeatureMatrix> = data.iter().collect();
    let cfg = KMeansConfig {
        k: a.k,
        seed: a.seed,
        max_iters: a.max_iters,
        n_init: a.n_init,
        language: a.lang,
        ..Default::default()
    };
    let fit = kmeans_fit(&views, &cfg)?;
    save_codebook(&a.out, &fit.codebook)?;
    println!(
        "files {} frames {} k {} inertia {} iterations {} converged {} run {}",
        paths.len(),
        data.iter().map(FeatureMatrix::rows).sum::<usize>(),
        a.k,
        fit.codebook.inertia(),
        fit.iterations,
        fit.converged,
        fit.run
    );
    Ok(())
}

fn tokenize(a: TokenizeArgs) -> anyhow::Result<()> {
    let cb = load_codebook(&a.codebook)?;
    let inputs: Vec<(String, PathBuf)> = if let Some(pattern) = &a.features {
        glob_paths(pattern)?
            .into_iter()
            .map(|p| (p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), p))
            .collect()
    } else {
        let manifest = load_manifest(a.manifest.as_ref().expect("clap enforces one source"))?;
        let mut v = Vec::new();
        for r in &manifest.records {
            let from_dir = a.ssl_dir.as_ref().map(|d| d.join(format!("{}.emof", r.utt_id))).filter(|p| p.is_file());
            let own = r.path.clone().filter(|_| r.path_kind() == Some(PathKind::Features));
            match from_dir.or(own) {
                Some(p) => v.push((r.utt_id.clone(), p)),
                None => log::warn!("utterance `{}` has no feature file; skipped", r.utt_id),
            }
        }
        v.sort();
        v
    };
    let lines: Vec<anyhow::Result<String>> = inputs
        .par_iter()
        .map(|(id, p)| {
            let m = read_features(p)?;
            if m.source() != FeatureSource::SslLayer9 {
                log::warn!("{}: features are not SSL layer-9 hidden states", p.display());
            }
            let m = if a.l2_normalize { m.l2_normalized() } else { m };
            Ok(format_tokens(&cb.encode(&m, id).with_context(|| format!("utterance `{id}`"))?))
        })
        .collect();
    let mut text = String::new();
    for l in lines {
        text.push_str(&l?);
        text.push('\n');
    }
    write_output(a.out.as_deref(), &text)
}

fn evaluate_cmd(a: EvaluateArgs) -> anyhow::Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let codebook = a.codebook.as_ref().map(load_codebook).transpose()?;
    let opts = EvalOptions {
        system: a.system,
        metrics: a.metrics.map(|m| m.0).unwrap_or_else(|| Metric::ALL.to_vec()),
        codebook,
        codebook_path: a.codebook,
        ssl_dir: a.ssl_dir,
        l2_normalize: a.l2_normalize,
        bleu_max_n: a.bleu_max_n as usize,
        use_c0: a.use_c0,
        ..EvalOptions::default()
    };
    let mut eval = evaluate(&manifest, &opts)?;
    eval.report.config.manifest = Some(a.manifest.display().to_string());
    for w in &eval.warnings {
        log::warn!("{w}");
    }
    let table = eval.report.render();
    if let Some(out) = &a.out {
        std::fs::write(out, eval.report.to_jsonl()?).with_context(|| format!("writing {}", out.display()))?;
        let txt = out.with_extension("txt");
        std::fs::write(&txt, &table).with_context(|| format!("writing {}", txt.display()))?;
    }
    print!("{table}");
    Ok(())
}

fn write_batch<T>(batch: &Batch<T>, out: Option<&Path>) -> anyhow::Result<()> {
    for id in &batch.skipped {
        log::warn!("utterance `{id}` has no WAV path; skipped");
    }
    write_output(out, &batch.csv)
}

fn pitch(a: ExportArgs) -> anyhow::Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let batch = pitch_csv(&manifest, &PitchConfig::default())?;
    write_batch(&batch, a.out.as_deref())?;
    finish_batch(batch.failures, "pitch tracking")
}

fn formants_cmd(a: FormantArgs) -> anyhow::Result<()> {
    let manifest = load_manifest(&a.export.manifest)?;
    let cfg = FormantConfig { lpc_order: a.lpc_order, ..FormantConfig::default() };
    let batch = formant_csv(&manifest, &cfg)?;
    write_batch(&batch, a.export.out.as_deref())?;
    if a.export.out.is_some() {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into());
        println!("utt_id\tframes\tF1_median_hz\tF2_median_hz\tF3_median_hz");
        for (id, frames) in &batch.items {
            let [f1, f2, f3] = formant_medians(frames);
            println!("{id}\t{}\t{}\t{}\t{}", frames.len(), cell(f1), cell(f2), cell(f3));
        }
    }
    finish_batch(batch.failures, "formant analysis")
}

fn numbers(line: &str) -> anyhow::Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| anyhow!("`{t}` is not a number")))
        .collect()
}

fn spherical(v: &[f64]) -> anyhow::Result<SphericalEmotion> {
    Ok(SphericalEmotion::new(v[0], v[1], v[2])?)
}

fn emotion(a: EmotionArgs) -> anyhow::Result<()> {
    let center = AvdVector::from_array(a.center);
    let width = if matches!(a.op, EmotionOp::Interpolate) { 6 } else { 3 };
    let stdin = std::io::stdin();
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = line.context("reading stdin")?;
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("line {}", i + 1);
        let v = numbers(&line).with_context(at)?;
        if v.len() != width {
            bail!("{}: expected {width} numbers, found {}", at(), v.len());
        }
        let result: Vec<f64> = (|| -> anyhow::Result<Vec<f64>> {
            Ok(match a.op {
                EmotionOp::ToSpherical => {
                    let mut p = AvdVector::new(v[0], v[1], v[2]);
                    if let Some((lo, hi)) = a.rescale {
                        p = p.rescale_to_unit_cube(lo, hi)?;
                    }
                    let s = cartesian_to_spherical(p, center);
                    vec![s.r, s.theta, s.phi]
                }
                EmotionOp::ToCartesian => spherical_to_cartesian(spherical(&v)?, center).to_array().to_vec(),
                EmotionOp::Interpolate => {
                    let s = interpolate(spherical(&v[..3])?, spherical(&v[3..])?, a.t)?;
                    vec![s.r, s.theta, s.phi]
                }
                EmotionOp::Scale => {
                    let s = scale_intensity(spherical(&v)?, a.k)?;
                    vec![s.r, s.theta, s.phi]
                }
                EmotionOp::Style => build_style_vector(spherical(&v)?, a.class, a.classes)?.fused,
            })
        })()
        .with_context(at)?;
        let text: Vec<String> = result.iter().map(f64::to_string).collect();
        writeln!(out, "{}", text.join(" ")).context("writing to stdout")?;
    }
    out.flush().context("writing to stdout")
}
