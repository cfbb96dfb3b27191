//! Command pipelines. Each returns a [`RunReport`]; certification problems
//! are recorded in the report rather than aborting, so the table is still
//! printed before the process exits with a failure code.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tuckerlite::cp::{cp_als, cp_lift, lift_error_bound, CpAlsOptions};
use tuckerlite::eig::{
    meig_multistart, meig_with_decomposition, zeig_multistart, zeig_with_decomposition,
    MeigOptions, ZeigOptions,
};
use tuckerlite::factor::svd;
use tuckerlite::gen::{gen_random_core_planted, GeneratorSpec};
use tuckerlite::tucker::{
    hosvd, norm_bounds, partial_symmetric_tucker, symmetric_tucker, tucker_rank,
};
use tuckerlite::{Tensor, Tucker};

use crate::io::load_tensor;
use crate::table::{fixed3, Cell, Format, Table};
use crate::Failure;

/// Relative reconstruction tolerance for accepted decompositions.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Rounding slack on the lift error bound, relative to `‖t‖_F`.
pub const BOUND_SLACK: f64 = 64.0 * f64::EPSILON;
/// Relative slack on the Frobenius sandwich.
pub const SANDWICH_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum Input {
    File(PathBuf),
    Gen(GeneratorSpec),
}

impl Input {
    pub fn load(&self) -> Result<Tensor, Failure> {
        match self {
            Input::File(p) => load_tensor(p),
            Input::Gen(spec) => Ok(spec.generate()?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Input::File(p) => p.display().to_string(),
            Input::Gen(spec) => spec.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub decompose: Duration,
    pub solve: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.decompose + self.solve
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: &'static str,
    pub input: String,
    pub core_shape: Option<Vec<usize>>,
    pub summary: Vec<(String, Cell, Format)>,
    pub table: Option<Table>,
    pub timings: Option<Timings>,
    pub complete: Option<bool>,
    /// Certification failures; non-empty means exit code 3.
    pub failures: Vec<String>,
}

impl RunReport {
    fn new(command: &'static str, input: String) -> Self {
        Self {
            command,
            input,
            core_shape: None,
            summary: Vec::new(),
            table: None,
            timings: None,
            complete: None,
            failures: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: Cell, format: Format) {
        self.summary.push((key.to_string(), value, format));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "input: {}", self.input);
        if let Some(shape) = &self.core_shape {
            let _ = writeln!(out, "core shape: {}", shape_string(shape));
        }
        for (k, v, f) in &self.summary {
            let text = match v {
                Cell::Num(x) if *f == Format::Fixed => fixed3(*x),
                Cell::Num(x) => format!("{x:.3e}"),
                Cell::Int(x) => x.to_string(),
                Cell::Text(s) => s.clone(),
            };
            let _ = writeln!(out, "{k}: {text}");
        }
        if let Some(c) = self.complete {
            let _ = writeln!(out, "complete: {c}");
        }
        if let Some(t) = &self.timings {
            let _ = writeln!(
                out,
                "time: decompose {:.3} ms, solve {:.3} ms, total {:.3} ms",
                ms(t.decompose),
                ms(t.solve),
                ms(t.total())
            );
        }
        if let Some(t) = &self.table {
            out.push('\n');
            out.push_str(&t.render());
        }
        for f in &self.failures {
            let _ = writeln!(out, "FAILED: {f}");
        }
        out
    }

    /// The main table, or the summary as `quantity,value` rows.
    pub fn csv_table(&self) -> Table {
        if let Some(t) = &self.table {
            return t.clone();
        }
        let mut t = Table::new(&[("quantity", Format::Fixed), ("value", Format::Fixed)]);
        if let Some(shape) = &self.core_shape {
            t.push(vec![
                Cell::Text("core_shape".into()),
                Cell::Text(shape_string(shape)),
            ]);
        }
        for (k, v, _) in &self.summary {
            t.push(vec![Cell::Text(k.clone()), v.clone()]);
        }
        t
    }

    pub fn status(&self) -> Result<(), Failure> {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(Failure::Certification(self.failures.join("; ")))
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn shape_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

fn list(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn decompose_with(t: &Tensor, symmetric: bool, rank_tol: f64) -> Result<Tucker, Failure> {
    Ok(if symmetric {
        symmetric_tucker(t, rank_tol)?
    } else {
        hosvd(t, rank_tol)?
    })
}

pub struct DecomposeArgs {
    pub symmetric: bool,
    pub rank_tol: f64,
}

/// Core shape, Tucker ranks, reconstruction residual and norm constants.
pub fn decompose(t: &Tensor, input: &Input, args: &DecomposeArgs) -> Result<RunReport, Failure> {
    let mut report = RunReport::new("decompose", input.describe());
    let (d, dt) = timed(|| decompose_with(t, args.symmetric, args.rank_tol));
    let d = d?;
    let ranks = tucker_rank(t, args.rank_tol)?;
    let residual = d.reconstruction_residual(t)?;
    let rel = residual / t.frobenius_norm().max(f64::MIN_POSITIVE);
    let bounds = norm_bounds(&d)?;
    report.core_shape = Some(d.core_shape().to_vec());
    report.note("kind", Cell::Text(d.kind().name().into()), Format::Fixed);
    report.note("shape", Cell::Text(shape_string(t.shape())), Format::Fixed);
    report.note("tucker ranks", Cell::Text(list(&ranks)), Format::Fixed);
    report.note(
        "relative reconstruction residual",
        Cell::Num(rel),
        Format::Sci,
    );
    report.note("alpha", Cell::Num(bounds.alpha), Format::Fixed);
    report.note("beta", Cell::Num(bounds.beta), Format::Fixed);
    let mut table = Table::new(&[
        ("mode", Format::Fixed),
        ("size", Format::Fixed),
        ("core", Format::Fixed),
        ("sigma_min", Format::Fixed),
        ("sigma_max", Format::Fixed),
        ("kappa", Format::Fixed),
    ]);
    for (n, f) in d.factors().iter().enumerate() {
        let s = svd(f)?;
        table.push(vec![
            Cell::Int(n + 1),
            Cell::Int(f.rows()),
            Cell::Int(f.cols()),
            Cell::Num(s.sigma_min()),
            Cell::Num(s.sigma_max()),
            Cell::Num(bounds.kappas[n]),
        ]);
    }
    report.table = Some(table);
    report.timings = Some(Timings {
        decompose: dt,
        solve: Duration::ZERO,
    });
    if rel > RECONSTRUCTION_TOL {
        report.failures.push(format!(
            "relative reconstruction residual {rel:.3e} exceeds {RECONSTRUCTION_TOL:e}"
        ));
    }
    Ok(report)
}

pub struct ZeigArgs {
    pub direct: bool,
    pub starts: usize,
    pub seed: u64,
    pub certify_tol: Option<f64>,
    pub rank_tol: f64,
}

impl ZeigArgs {
    fn options(&self) -> ZeigOptions {
        ZeigOptions {
            starts: self.starts,
            seed: self.seed,
            certify_tol: self.certify_tol,
            rank_tol: self.rank_tol,
            ..ZeigOptions::default()
        }
    }
}

fn certify_tol(t: &Tensor, explicit: Option<f64>) -> f64 {
    explicit.unwrap_or(tuckerlite::eig::DEFAULT_CERTIFY_REL * t.frobenius_norm().max(1.0))
}

/// Z-eigenpairs, directly or through the symmetric core. The via-core time
/// includes the decomposition.
pub fn zeig(t: &Tensor, input: &Input, args: &ZeigArgs) -> Result<RunReport, Failure> {
    let mut report = RunReport::new("zeig", input.describe());
    let opts = args.options();
    let (spec, timings) = if args.direct {
        let (spec, solve) = timed(|| zeig_multistart(t, &opts));
        report.core_shape = Some(t.shape().to_vec());
        (
            spec?,
            Timings {
                decompose: Duration::ZERO,
                solve,
            },
        )
    } else {
        let (d, decompose) = timed(|| symmetric_tucker(t, args.rank_tol));
        let d = d?;
        report.core_shape = Some(d.core_shape().to_vec());
        let (spec, solve) = timed(|| zeig_with_decomposition(t, &d, &opts));
        (spec?, Timings { decompose, solve })
    };
    report.timings = Some(timings);
    report.complete = Some(spec.complete);
    report.note(
        "method",
        Cell::Text(if args.direct { "direct" } else { "via-core" }.into()),
        Format::Fixed,
    );
    report.note(
        "solver",
        Cell::Text(spec.method.name().into()),
        Format::Fixed,
    );
    report.note(
        "certify tolerance",
        Cell::Num(certify_tol(t, args.certify_tol)),
        Format::Sci,
    );
    report.note("eigenpairs", Cell::Int(spec.pairs.len()), Format::Fixed);

    let n = t.shape()[0];
    let mut columns = vec![("lambda".to_string(), Format::Fixed)];
    columns.extend((1..=n).map(|i| (format!("x{i}"), Format::Fixed)));
    columns.push(("residual".into(), Format::Sci));
    columns.push(("status".into(), Format::Fixed));
    let mut table = Table::with_headers(columns);
    let rows = spec
        .pairs
        .iter()
        .map(|p| (p, "ok"))
        .chain(spec.uncertified.iter().map(|p| (p, "FAIL")));
    for (p, status) in rows {
        let mut row = vec![Cell::Num(p.lambda)];
        row.extend(p.x.iter().map(|&v| Cell::Num(v)));
        row.push(Cell::Num(p.residual));
        row.push(Cell::Text(status.into()));
        table.push(row);
    }
    report.table = Some(table);
    if !spec.uncertified.is_empty() {
        report.failures.push(format!(
            "{} eigenpair(s) failed certification",
            spec.uncertified.len()
        ));
    }
    Ok(report)
}

pub struct MeigArgs {
    pub direct: bool,
    pub starts: usize,
    pub seed: u64,
    pub certify_tol: Option<f64>,
    pub rank_tol: f64,
}

/// M-eigenpairs of a partial symmetric 4-way tensor.
pub fn meig(t: &Tensor, input: &Input, args: &MeigArgs) -> Result<RunReport, Failure> {
    let mut report = RunReport::new("meig", input.describe());
    let opts = MeigOptions {
        starts: args.starts,
        seed: args.seed,
        certify_tol: args.certify_tol,
        rank_tol: args.rank_tol,
        ..MeigOptions::default()
    };
    let (spec, timings) = if args.direct {
        let (spec, solve) = timed(|| meig_multistart(t, &opts));
        report.core_shape = Some(t.shape().to_vec());
        (
            spec?,
            Timings {
                decompose: Duration::ZERO,
                solve,
            },
        )
    } else {
        let (d, decompose) = timed(|| partial_symmetric_tucker(t, args.rank_tol));
        let d = d?;
        report.core_shape = Some(d.core_shape().to_vec());
        let (spec, solve) = timed(|| meig_with_decomposition(t, &d, &opts));
        (spec?, Timings { decompose, solve })
    };
    report.timings = Some(timings);
    report.complete = Some(false);
    report.note(
        "method",
        Cell::Text(if args.direct { "direct" } else { "via-core" }.into()),
        Format::Fixed,
    );
    report.note(
        "certify tolerance",
        Cell::Num(certify_tol(t, args.certify_tol)),
        Format::Sci,
    );
    report.note("eigenpairs", Cell::Int(spec.pairs.len()), Format::Fixed);

    let (i1, i2) = (t.shape()[0], t.shape()[1]);
    let mut columns = vec![
        ("lambda".to_string(), Format::Fixed),
        ("mu".to_string(), Format::Fixed),
    ];
    columns.extend((1..=i1).map(|i| (format!("x{i}"), Format::Fixed)));
    columns.extend((1..=i2).map(|i| (format!("y{i}"), Format::Fixed)));
    columns.push(("residual".into(), Format::Sci));
    columns.push(("status".into(), Format::Fixed));
    let mut table = Table::with_headers(columns);
    let rows = spec
        .pairs
        .iter()
        .map(|p| (p, "ok"))
        .chain(spec.uncertified.iter().map(|p| (p, "FAIL")));
    for (p, status) in rows {
        let mut row = vec![Cell::Num(p.lambda), Cell::Num(p.mu)];
        row.extend(p.x.iter().chain(&p.y).map(|&v| Cell::Num(v)));
        row.push(Cell::Num(p.residual));
        row.push(Cell::Text(status.into()));
        table.push(row);
    }
    report.table = Some(table);
    if !spec.uncertified.is_empty() {
        report.failures.push(format!(
            "{} M-eigenpair(s) failed certification",
            spec.uncertified.len()
        ));
    }
    Ok(report)
}

pub struct CpArgs {
    pub rank: usize,
    pub seed: u64,
    pub symmetric: bool,
    pub rank_tol: f64,
}

/// CP on the core, lifted, with the measured residual next to the bound.
pub fn cp(t: &Tensor, input: &Input, args: &CpArgs) -> Result<RunReport, Failure> {
    let mut report = RunReport::new("cp", input.describe());
    let (d, decompose) = timed(|| decompose_with(t, args.symmetric, args.rank_tol));
    let d = d?;
    report.core_shape = Some(d.core_shape().to_vec());
    let opts = CpAlsOptions {
        seed: args.seed,
        ..CpAlsOptions::default()
    };
    let (fit, solve) = timed(|| -> Result<_, Failure> {
        let (core_cp, fit) = cp_als(d.core(), args.rank, &opts)?;
        Ok((cp_lift(&core_cp, &d)?, fit))
    });
    let (lifted, fit) = fit?;
    report.timings = Some(Timings { decompose, solve });
    let err1 = d.reconstruction_residual(t)?;
    let err2 = fit.residual;
    let bound = lift_error_bound(err1, err2, &d)?;
    let measured = t.sub(&lifted.reconstruct())?.frobenius_norm();
    let core_norm = d.core().frobenius_norm().max(f64::MIN_POSITIVE);
    report.note("rank", Cell::Int(args.rank), Format::Fixed);
    report.note("lifted terms", Cell::Int(lifted.rank()), Format::Fixed);
    report.note(
        "core relative residual",
        Cell::Num(err2 / core_norm),
        Format::Sci,
    );
    report.note("als iterations", Cell::Int(fit.iterations), Format::Fixed);
    report.note(
        "als converged",
        Cell::Text(fit.converged.to_string()),
        Format::Fixed,
    );
    report.note("err1 (decomposition)", Cell::Num(err1), Format::Sci);
    report.note("err2 (core CP)", Cell::Num(err2), Format::Sci);
    report.note("bound", Cell::Num(bound), Format::Sci);
    report.note("measured residual", Cell::Num(measured), Format::Sci);

    let mut table = Table::new(&[("term", Format::Fixed), ("weight", Format::Fixed)]);
    for (s, &w) in lifted.weights().iter().enumerate() {
        table.push(vec![Cell::Int(s + 1), Cell::Num(w)]);
    }
    report.table = Some(table);
    if measured > bound + BOUND_SLACK * t.frobenius_norm() {
        report.failures.push(format!(
            "measured residual {measured:.3e} exceeds bound {bound:.3e}"
        ));
    }
    Ok(report)
}

pub struct NormsArgs {
    pub symmetric: bool,
    pub rank_tol: f64,
}

/// Frobenius norms of the tensor and its core with the sandwich constants.
pub fn norms(t: &Tensor, input: &Input, args: &NormsArgs) -> Result<RunReport, Failure> {
    let mut report = RunReport::new("norms", input.describe());
    let (d, decompose) = timed(|| decompose_with(t, args.symmetric, args.rank_tol));
    let d = d?;
    report.core_shape = Some(d.core_shape().to_vec());
    report.timings = Some(Timings {
        decompose,
        solve: Duration::ZERO,
    });
    let b = norm_bounds(&d)?;
    let (tn, gn) = (t.frobenius_norm(), d.core().frobenius_norm());
    let holds = b.sandwich_holds(tn, gn, SANDWICH_SLACK);
    report.note("kind", Cell::Text(d.kind().name().into()), Format::Fixed);
    report.note("tensor norm", Cell::Num(tn), Format::Fixed);
    report.note("core norm", Cell::Num(gn), Format::Fixed);
    report.note("alpha", Cell::Num(b.alpha), Format::Fixed);
    report.note("beta", Cell::Num(b.beta), Format::Fixed);
    report.note(
        "sandwich holds",
        Cell::Text(holds.to_string()),
        Format::Fixed,
    );
    if !holds {
        report.failures.push(format!(
            "sandwich violated: {:.6e} <= {tn:.6e} <= {:.6e} fails",
            b.alpha * gn,
            b.beta * gn
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Examples,
    Random,
}

pub struct BenchArgs {
    pub suite: Suite,
    pub reps: usize,
    pub starts: usize,
    pub seed: u64,
    pub rank_tol: f64,
}

fn bench_instances(args: &BenchArgs) -> Result<Vec<(String, Tensor)>, Failure> {
    match args.suite {
        Suite::Examples => [
            ("example1", "example 1"),
            ("sign_harmonic", "example 2"),
            ("log_sum", "example 3"),
            ("sin_sum", "example 4"),
        ]
        .iter()
        .map(|(g, label)| {
            Ok((
                label.to_string(),
                GeneratorSpec::with_defaults(g)?.generate()?,
            ))
        })
        .collect(),
        Suite::Random => (0..5u64)
            .map(|k| {
                let dim = 4 + (k as usize % 3);
                let order = 3 + (k as usize % 2);
                let p = gen_random_core_planted(2, dim, order, args.seed.wrapping_add(k))?;
                Ok((format!("planted #{}", k + 1), p.tensor))
            })
            .collect(),
    }
}

/// Direct and via-core Z-spectra with identical options, timed per
/// repetition.
pub fn bench(args: &BenchArgs) -> Result<RunReport, Failure> {
    let suite = match args.suite {
        Suite::Examples => "examples",
        Suite::Random => "random",
    };
    let mut report = RunReport::new("bench", format!("suite {suite}"));
    let opts = ZeigOptions {
        starts: args.starts,
        seed: args.seed,
        rank_tol: args.rank_tol,
        ..ZeigOptions::default()
    };
    let mut table = Table::new(&[
        ("instance", Format::Fixed),
        ("order", Format::Fixed),
        ("size", Format::Fixed),
        ("core size", Format::Fixed),
        ("rep", Format::Fixed),
        ("direct ms", Format::Fixed),
        ("core ms", Format::Fixed),
        ("direct pairs", Format::Fixed),
        ("core pairs", Format::Fixed),
    ]);
    for (label, t) in bench_instances(args)? {
        for rep in 1..=args.reps {
            let (direct, td) = timed(|| zeig_multistart(&t, &opts));
            let direct = direct?;
            let (via, tc) = timed(|| -> Result<_, Failure> {
                let d = symmetric_tucker(&t, args.rank_tol)?;
                let s = zeig_with_decomposition(&t, &d, &opts)?;
                Ok((d.core_shape()[0], s))
            });
            let (core_size, via) = via?;
            table.push(vec![
                Cell::Text(label.clone()),
                Cell::Int(t.order()),
                Cell::Int(t.shape()[0]),
                Cell::Int(core_size),
                Cell::Int(rep),
                Cell::Num(ms(td)),
                Cell::Num(ms(tc)),
                Cell::Int(direct.pairs.len()),
                Cell::Int(via.pairs.len()),
            ]);
            for (name, s) in [("direct", &direct), ("via-core", &via)] {
                if !s.uncertified.is_empty() {
                    report.failures.push(format!(
                        "{label} rep {rep}: {} uncertified {name} pair(s)",
                        s.uncertified.len()
                    ));
                }
            }
        }
    }
    report.note("starts", Cell::Int(args.starts), Format::Fixed);
    report.note("repetitions", Cell::Int(args.reps), Format::Fixed);
    report.table = Some(table);
    Ok(report)
}
