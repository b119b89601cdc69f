use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kalpha::derivs::DerivField;
use kalpha::elliptic::ellipticity_report;
use kalpha::examples::{
    bundled_boundaries, ex41_boundary, ex41_derivs, ex42_boundary, ex43_boundary, ex43_derivs, Ex41Field, Ex41Params,
    EX43_DEFAULT_TRUNC,
};
use kalpha::kernel::{poisson_integral, QuadSpec};
use kalpha::norms::{divergence_probe, nested_cutoffs, DiskField, KernelField, NormKind, NormReport, PNorm, Quantity};
use kalpha::regimes::{
    certify_b_alpha_1, certify_eq_3_7_grid, certify_lemma_32_grid, certify_lemma_i_grid, classify, Certificate,
    CERT_NODES,
};
use kalpha::{AlphaParam, BoundaryData, ComplexPoint};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "kalpha", version, about = "Weighted Poisson integrals on the unit disk")]
struct Cli {
    /// Worker threads for grid sweeps (0 = all cores).
    #[arg(long, global = true, env = "KALPHA_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate f and its derivatives on rings or random points.
    Eval(EvalArgs),
    /// Truncated Hardy or Bergman norms at nested cutoffs.
    Norm(NormArgs),
    /// Classify (alpha, p) into its parameter regime.
    Regime(RegimeArgs),
    /// Run certification grids; exit status 1 if any check fails.
    Verify(VerifyArgs),
    /// Write a bundled boundary function as CSV.
    Example(ExampleArgs),
    /// Ellipticity trend report for a mapping.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Source {
    /// Boundary CSV with header theta,re,im.
    #[arg(long, conflicts_with = "example")]
    input: Option<PathBuf>,
    /// 4.1, 4.2, 4.3 or a bundled name (constant, mode1, mode3, hypergeometric, piecewise_phase, log_series).
    #[arg(long)]
    example: Option<String>,
    /// Weight parameter; defaults to -0.5 for 4.1 and 0 otherwise.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Degree for 4.1.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Series truncation for 4.3.
    #[arg(long)]
    trunc: Option<usize>,
}

#[derive(Args)]
struct Quad {
    #[arg(long, default_value_t = 2048)]
    nodes: usize,
    #[arg(long, default_value_t = 0.999)]
    r_max: f64,
    #[arg(long, default_value_t = 64)]
    radial_nodes: usize,
    /// Refuse to differentiate sampled data spectrally.
    #[arg(long)]
    no_spectral: bool,
}

impl Quad {
    fn spec(&self) -> Result<QuadSpec> {
        Ok(QuadSpec::new(self.nodes, self.r_max, self.radial_nodes)?.with_spectral_fallback(!self.no_spectral))
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    quad: Quad,
    /// Full rings at these radii.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    radii: Vec<f64>,
    /// Use this many random points in |z| <= r-max instead of rings.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    quad: Quad,
    /// Exponent >= 1 or `inf`.
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "f")]
    quantity: String,
    #[arg(long, default_value = "hardy")]
    kind: String,
    /// Nested truncation radii (at least 3); defaults to 1-100e, 1-10e, r-max with e = 1 - r-max.
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<f64>>,
    /// Use the exact derivatives of 4.1 instead of quadrature.
    #[arg(long)]
    closed_form: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RegimeArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Exponent >= 1 or `inf`.
    #[arg(long)]
    p: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Suite {
    Inequalities,
    RadialWeight,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Inequalities)]
    suite: Suite,
    #[arg(long, default_value_t = CERT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = 0.999)]
    r_max: f64,
    #[arg(long, default_value_t = 64)]
    radial_nodes: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long)]
    id: String,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long, default_value_t = 2048)]
    nodes: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// 4.1, 4.2, 4.3 or identity.
    #[arg(long)]
    id: String,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Nested grid radii; defaults depend on the example.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    k: Vec<f64>,
    /// Angles per ring for closed-form fields.
    #[arg(long, default_value_t = 256)]
    angles: usize,
    /// Boundary nodes for quadrature-based fields.
    #[arg(long, default_value_t = 1 << 17)]
    nodes: usize,
    #[command(flatten)]
    out: OutArgs,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(out: &OutArgs, value: &T) -> Result<()> {
    let mut w = sink(&out.output)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn default_alpha(id: &str, alpha: Option<f64>) -> f64 {
    alpha.unwrap_or(if id == "4.1" || id == "hypergeometric" {
        -0.5
    } else {
        0.0
    })
}

fn example_boundary(id: &str, alpha: f64, n: u32, trunc: Option<usize>, nodes: usize) -> Result<BoundaryData> {
    Ok(match id {
        "4.1" => ex41_boundary(&Ex41Params::new(alpha, n)?, nodes)?,
        "4.2" => ex42_boundary(nodes)?,
        "4.3" => ex43_boundary(nodes, trunc.unwrap_or_else(|| (nodes / 2 - 1).min(EX43_DEFAULT_TRUNC)))?,
        name => match bundled_boundaries(nodes)?.into_iter().find(|(k, _)| k == name) {
            Some((_, f)) => f,
            None => bail!("unknown example {name:?}"),
        },
    })
}

impl Source {
    /// Boundary data and the weight parameter.
    fn load(&self, nodes: usize) -> Result<(BoundaryData, f64)> {
        match (&self.input, &self.example) {
            (Some(path), _) => {
                let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
                Ok((BoundaryData::read_csv(f)?, self.alpha.unwrap_or(0.0)))
            }
            (None, Some(id)) => {
                let alpha = default_alpha(id, self.alpha);
                Ok((example_boundary(id, alpha, self.n, self.trunc, nodes)?, alpha))
            }
            (None, None) => bail!("one of --input or --example is required"),
        }
    }
}

#[derive(Serialize)]
struct EvalReport {
    alpha: f64,
    nodes: usize,
    f: Vec<C64>,
    field: DerivField,
}

fn run_eval(a: &EvalArgs) -> Result<ExitCode> {
    let q = a.quad.spec()?;
    let (f, alpha) = a.source.load(q.angular_nodes)?;
    let al = AlphaParam::new(alpha)?;
    let field = match a.random {
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let pts = (0..k)
                .map(|_| {
                    let r = q.r_max * rng.gen::<f64>().sqrt();
                    ComplexPoint::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect::<kalpha::Result<Vec<_>>>()?;
            DerivField::from_kernel(&al, &f, &pts, &q)?
        }
        None => DerivField::from_kernel_rings(&al, &f, &a.radii, &q)?,
    };
    if a.out.format == Format::Csv {
        let mut w = sink(&a.out.output)?;
        field.write_csv(&mut w)?;
        w.flush()?;
        return Ok(ExitCode::SUCCESS);
    }
    let values = field
        .points
        .iter()
        .map(|&z| Ok(poisson_integral(&al, &f, z, &q)?.value))
        .collect::<kalpha::Result<Vec<_>>>()?;
    emit_json(
        &a.out,
        &EvalReport {
            alpha,
            nodes: f.len(),
            f: values,
            field,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run_norm(a: &NormArgs) -> Result<ExitCode> {
    let q = a.quad.spec()?;
    let p: PNorm = a.p.parse()?;
    let quantity: Quantity = a.quantity.parse()?;
    let kind: NormKind = a.kind.parse()?;
    let cutoffs = a.cutoffs.clone().unwrap_or_else(|| nested_cutoffs(q.r_max));
    let (report, alpha) = if a.closed_form {
        let id = a.source.example.as_deref().unwrap_or("4.1");
        if id != "4.1" || a.source.input.is_some() {
            bail!("--closed-form is only available for example 4.1");
        }
        let alpha = default_alpha(id, a.source.alpha);
        let field = Ex41Field::new(Ex41Params::new(alpha, a.source.n)?, quantity);
        (divergence_probe(&field, p, &cutoffs, kind, &q)?, alpha)
    } else {
        let (f, alpha) = a.source.load(q.angular_nodes)?;
        let field = KernelField {
            alpha: AlphaParam::new(alpha)?,
            boundary: &f,
            quad: q.clone(),
            quantity,
        };
        let field: &dyn DiskField = &field;
        (divergence_probe(field, p, &cutoffs, kind, &q)?, alpha)
    };
    let report = NormReport::from_probe(quantity.as_str(), Some(alpha), &report);
    if a.out.format == Format::Csv {
        let mut w = sink(&a.out.output)?;
        writeln!(w, "cutoff,value")?;
        for (c, v) in report.cutoffs.iter().zip(&report.values) {
            writeln!(w, "{c},{v}")?;
        }
        w.flush()?;
    } else {
        emit_json(&a.out, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_regime(a: &RegimeArgs) -> Result<ExitCode> {
    let c = classify(a.alpha, a.p.parse()?)?;
    emit_json(&a.out, &c)?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: &VerifyArgs) -> Result<ExitCode> {
    let q = QuadSpec::new(a.nodes, a.r_max, a.radial_nodes)?;
    let mut certs: Vec<Certificate> = Vec::new();
    if matches!(a.suite, Suite::Inequalities | Suite::All) {
        certs.extend(certify_lemma_i_grid(&q)?);
        certs.extend(certify_lemma_32_grid(&q)?);
        certs.extend(certify_eq_3_7_grid(&q)?);
    }
    if matches!(a.suite, Suite::RadialWeight | Suite::All) {
        certs.extend(certify_b_alpha_1(&[-0.9, -0.5, 0.0, 0.5, 1.0, 2.0], 8192)?);
    }
    if a.out.format == Format::Csv {
        let mut w = sink(&a.out.output)?;
        writeln!(w, "check,params,lhs,rhs,holds")?;
        for c in &certs {
            let params = serde_json::to_string(&c.params)?.replace('"', "'");
            writeln!(w, "{},\"{}\",{},{},{}", c.check, params, c.lhs, c.rhs, c.holds)?;
        }
        w.flush()?;
    } else {
        emit_json(&a.out, &certs)?;
    }
    let failed = certs.iter().filter(|c| !c.holds).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", certs.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_example(a: &ExampleArgs) -> Result<ExitCode> {
    let alpha = default_alpha(&a.id, a.alpha);
    let f = example_boundary(&a.id, alpha, a.n, a.trunc, a.nodes)?;
    let mut w = sink(&a.export)?;
    f.write_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn rings(radii: &[f64], angles: usize) -> Result<Vec<ComplexPoint>> {
    let mut pts = Vec::with_capacity(radii.len() * angles);
    for &r in radii {
        for k in 0..angles {
            pts.push(ComplexPoint::from_polar(
                r,
                std::f64::consts::TAU * k as f64 / angles as f64,
            )?);
        }
    }
    Ok(pts)
}

fn run_report(a: &ReportArgs) -> Result<ExitCode> {
    let default_radii: &[f64] = match a.id.as_str() {
        "4.1" => &[1.0 - 1e-5, 1.0 - 1e-6, 1.0 - 1e-7],
        "4.2" => &[0.99, 0.999, 0.9999],
        "4.3" | "identity" => &[0.9, 0.99, 0.999],
        other => bail!("unknown report id {other:?}; use 4.1, 4.2, 4.3 or identity"),
    };
    let radii = a.radii.clone().unwrap_or_else(|| default_radii.to_vec());
    let nested = |g: &(dyn Fn(C64) -> kalpha::Result<(C64, C64)> + Sync)| -> Result<Vec<DerivField>> {
        (1..=radii.len())
            .map(|m| Ok(DerivField::from_wirtinger(&rings(&radii[..m], a.angles)?, g)?))
            .collect()
    };
    let fields = match a.id.as_str() {
        "4.1" => {
            let p = Ex41Params::new(default_alpha("4.1", a.alpha), a.n)?;
            nested(&|z| {
                let d = ex41_derivs(&p, z)?;
                Ok((d.dz, d.dzbar))
            })?
        }
        "4.3" => nested(&|z| {
            let d = ex43_derivs(z, 65536)?.value;
            Ok((d.dz, d.dzbar))
        })?,
        "identity" => nested(&|_| Ok((C64::new(1.0, 0.0), C64::new(0.0, 0.0))))?,
        _ => {
            let f = ex42_boundary(a.nodes)?;
            let r_top = radii.iter().copied().fold(0.0, f64::max);
            let q = QuadSpec::new(a.nodes, r_top, 16)?;
            let al = AlphaParam::new(0.0)?;
            (1..=radii.len())
                .map(|m| Ok(DerivField::from_kernel_rings(&al, &f, &radii[..m], &q)?))
                .collect::<Result<_>>()?
        }
    };
    let rep = ellipticity_report(&fields, &a.k)?;
    if a.out.format == Format::Csv {
        let mut w = sink(&a.out.output)?;
        writeln!(w, "K,r_max,min_kprime")?;
        for e in &rep.entries {
            writeln!(w, "{},{},{}", e.k, e.r_max, e.min_kprime)?;
        }
        w.flush()?;
    } else {
        emit_json(&a.out, &rep)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()?;
    }
    match &cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Norm(a) => run_norm(a),
        Command::Regime(a) => run_regime(a),
        Command::Verify(a) => run_verify(a),
        Command::Example(a) => run_example(a),
        Command::Report(a) => run_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
