use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pencilkit::charfn::{char_fn_sample, sweep, LambdaGrid};
use pencilkit::colligation::PencilSystem;
use pencilkit::coupling::{blaschke_product_eval, continuous_limit_eval, couple};
use pencilkit::dynamics::{self, conservation_report, solve_full, uniform_times, InputSignal};
use pencilkit::error::{Error, ErrorClass};
use pencilkit::factor::{
    coupling_k_contour, factor_bernoulli, factor_spectral, ContourSpec, FactoredPencil, SplitRule,
};
use pencilkit::io::{self, matrix_to_json, AnticanonFile, ChainFile, CNum, GridFile, PencilFile, RiemannFile, VolterraFile};
use pencilkit::linalg::{c, from_real_diag, max_abs, spectral_norm, CVector, C64, I};
use pencilkit::models::{
    anticommutator_general, anticommuting_canonical_form, hilbert_root, model_defect, model_quadruple, offdiag,
    riemann_charfn_direct, riemann_charfn_scalar, stieltjes_anticommutator, volterra_build,
};
use pencilkit::verify::{self, Check, VerifyConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "pencilkit", version, about = "Quadratic operator pencils and their open systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral roots X, Y and the coupling operator K.
    Factor(FactorArgs),
    /// Characteristic function S over a lambda grid (CSV).
    Charfn(CharfnArgs),
    /// Time response of the open system (CSV).
    Simulate(SimulateArgs),
    /// Couple two systems; the output of the first drives the second.
    Couple(CoupleArgs),
    /// Characteristic function of a chain of factors over a lambda grid (CSV).
    Chain(ChainArgs),
    /// Discrete functional models.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Identity suite with a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// Output file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FactorMethod {
    Schur,
    Bernoulli,
}

#[derive(Args)]
struct FactorArgs {
    input: PathBuf,
    /// gap, halfplane-re, halfplane-im or smallest
    #[arg(long, default_value = "gap")]
    rule: String,
    #[arg(long, value_enum, default_value = "schur")]
    method: FactorMethod,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    /// Also compute K by contour quadrature around spec(Y).
    #[arg(long)]
    contour: bool,
    #[arg(long, default_value_t = 1e-12)]
    quad_tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CharfnArgs {
    input: PathBuf,
    /// re0:re1:n,im0:im1:m
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Cauchy,
    Rk4,
}

#[derive(Args)]
struct SimulateArgs {
    input: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    dt: f64,
    /// Initial state as a JSON vector of [re, im] pairs; zero if omitted.
    #[arg(long, allow_hyphen_values = true)]
    h0: Option<String>,
    /// Initial velocity, same format.
    #[arg(long, allow_hyphen_values = true)]
    h1: Option<String>,
    /// Plane-wave input exp(lambda t) u0 with lambda given as "re,im".
    #[arg(long, requires = "u0", allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Input amplitude as a JSON vector.
    #[arg(long, allow_hyphen_values = true)]
    u0: Option<String>,
    #[arg(long, value_enum, default_value = "cauchy")]
    solver: Solver,
    #[arg(long, default_value = "gap")]
    rule: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CoupleArgs {
    first: PathBuf,
    second: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ChainArgs {
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Hilbert-transform root and the model quadruple of a grid.
    Hilbert(ModelArgs),
    /// Anti-commutator solution; handles mirrored nodes when the grid has any.
    Stieltjes(ModelArgs),
    /// Canonical form of an anti-commuting Hermitian pair.
    Anticanon(ModelArgs),
    /// Volterra model: residuals, and S against its continuous limit with --grid.
    Volterra(GridModelArgs),
    /// Scalar Riemann route against the direct grid route (CSV).
    Riemann(RiemannArgs),
}

#[derive(Args)]
struct ModelArgs {
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct GridModelArgs {
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct RiemannArgs {
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Nodes of the direct grid route.
    #[arg(long, default_value_t = 512)]
    direct_nodes: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Pencil file; omit to use --random.
    input: Option<PathBuf>,
    /// Number of seeded random instances.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 3)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "gap")]
    rule: String,
    #[arg(long, default_value_t = 8)]
    samples: usize,
}

enum Failure {
    Core(Error),
    Io(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn read(path: &PathBuf) -> Run<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(out: &Output, text: &str) -> Run<()> {
    match &out.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(out: &Output, v: &Value) -> Run<()> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    write(out, &s)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cplx(z: C64) -> String {
    format!("{},{}", num(z.re), num(z.im))
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn parse_vector(s: &str, n: usize, what: &str) -> Run<CVector> {
    let v: Vec<CNum> = io::parse(s)?;
    if v.len() != n {
        return Err(Error::Dimension(format!("{what} has {} entries, expected {n}", v.len())).into());
    }
    Ok(CVector::from_iterator(n, v.into_iter().map(CNum::value)))
}

fn parse_complex(s: &str) -> Run<C64> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::Parse(format!("expected 're,im', got '{s}'"));
    if parts.len() != 2 {
        return Err(bad().into());
    }
    let re = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
    let im = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
    Ok(c(re, im))
}

fn grid_points(spec: &str) -> Run<Vec<C64>> {
    Ok(LambdaGrid::parse(spec)?.points())
}

fn factor_json(p: &PencilSystem, f: &FactoredPencil) -> Value {
    let r = f.residuals(p);
    json!({
        "method": f.method.to_string(),
        "x": matrix_to_json(&f.x),
        "y": matrix_to_json(&f.y),
        "k": matrix_to_json(&f.k),
        "spec_x": f.spec_x.eigenvalues.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
        "spec_y": f.spec_y.eigenvalues.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
        "separation": f.spec_x.separation,
        "graph_cond": f.graph_cond,
        "iterations": f.iterations,
        "residuals": {
            "sum": r.sum,
            "product": r.product,
            "right_root": r.right_root,
            "left_root": r.left_root,
            "sylvester": r.sylvester,
            "scale": r.scale,
        },
    })
}

fn cmd_factor(a: &FactorArgs) -> Run<()> {
    let p = io::parse_pencil(&read(&a.input)?)?;
    let f = match a.method {
        FactorMethod::Schur => factor_spectral(&p, &SplitRule::parse(&a.rule)?)?,
        FactorMethod::Bernoulli => factor_bernoulli(&p, a.max_iter, a.tol)?,
    };
    let mut v = factor_json(&p, &f);
    if a.contour {
        let g = ContourSpec::around_left_root(&f)?;
        let res = coupling_k_contour(&p, &f, &g, a.quad_tol)?;
        v["contour"] = json!({
            "center": cjson(g.center),
            "radius": g.radius,
            "nodes": res.nodes,
            "converged": res.converged,
            "last_change": res.last_change,
            "difference_from_sylvester": spectral_norm(&(&res.k - &f.k)),
            "k": matrix_to_json(&res.k),
        });
    }
    write_json(&a.out, &v)
}

fn cmd_charfn(a: &CharfnArgs) -> Run<()> {
    let p = io::parse_pencil(&read(&a.input)?)?;
    let pts = grid_points(&a.grid)?;
    let m = p.colligation.dim_e();
    let mut out = String::from("lambda_re,lambda_im");
    for i in 0..m {
        for j in 0..m {
            write!(out, ",s{i}{j}_re,s{i}{j}_im").unwrap();
        }
    }
    out.push('\n');
    for (z, s) in pts.iter().zip(sweep(&pts, |z| char_fn_sample(&p, z))) {
        let s = s?.s;
        out.push_str(&cplx(*z));
        for i in 0..m {
            for j in 0..m {
                write!(out, ",{}", cplx(s[(i, j)])).unwrap();
            }
        }
        out.push('\n');
    }
    write(&a.out, &out)
}

fn cmd_simulate(a: &SimulateArgs) -> Run<()> {
    let p = io::parse_pencil(&read(&a.input)?)?;
    let (n, m) = (p.n(), p.colligation.dim_e());
    let h0 = a.h0.as_deref().map_or(Ok(CVector::zeros(n)), |s| parse_vector(s, n, "h0"))?;
    let h1 = a.h1.as_deref().map_or(Ok(CVector::zeros(n)), |s| parse_vector(s, n, "h1"))?;
    let input = match (&a.lambda, &a.u0) {
        (Some(l), Some(u)) => InputSignal::PlaneWave { lambda: parse_complex(l)?, u0: parse_vector(u, m, "u0")? },
        (None, Some(u)) => InputSignal::PlaneWave { lambda: c(0.0, 0.0), u0: parse_vector(u, m, "u0")? },
        _ => InputSignal::Zero,
    };
    let times = uniform_times(a.horizon, a.dt)?;
    let traj = match a.solver {
        Solver::Cauchy => {
            let f = factor_spectral(&p, &SplitRule::parse(&a.rule)?)?;
            solve_full(&p, &f, &h0, &h1, &input, &times)?
        }
        Solver::Rk4 => dynamics::reference::rk4(&p, &h0, &h1, &input, &times)?,
    };
    let cons = if traj.len() >= 3 { Some(conservation_report(&traj, &p)?) } else { None };
    let mut out = String::from("t");
    for k in 0..n {
        write!(out, ",h{k}_re,h{k}_im").unwrap();
    }
    for k in 0..m {
        write!(out, ",v{k}_re,v{k}_im").unwrap();
    }
    out.push_str(",energy_residual\n");
    for j in 0..traj.len() {
        out.push_str(&num(traj.times[j]));
        for k in 0..n {
            write!(out, ",{}", cplx(traj.h[j][k])).unwrap();
        }
        for k in 0..m {
            write!(out, ",{}", cplx(traj.v[j][k])).unwrap();
        }
        let r = cons.as_ref().map_or(0.0, |c| c.residual[j]);
        writeln!(out, ",{}", num(r)).unwrap();
    }
    write(&a.out, &out)
}

fn cmd_couple(a: &CoupleArgs) -> Run<()> {
    let p1 = io::parse_pencil(&read(&a.first)?)?;
    let p2 = io::parse_pencil(&read(&a.second)?)?;
    let cs = couple(&p1, &p2)?;
    write_json(&a.out, &serde_json::to_value(PencilFile::from_system(&cs.system)).expect("serializable"))
}

fn cmd_chain(a: &ChainArgs) -> Run<()> {
    let file: ChainFile = io::parse(&read(&a.input)?)?;
    let (spec, cont) = file.to_spec()?;
    let pts = grid_points(&a.grid)?;
    let mut out = String::from("lambda_re,lambda_im,s_re,s_im\n");
    let vals = sweep(&pts, |z| {
        let mut s = blaschke_product_eval(&spec, z)?;
        if let Some(cs) = &cont {
            s *= continuous_limit_eval(cs, z)?;
        }
        Ok(s)
    });
    for (z, s) in pts.iter().zip(vals) {
        writeln!(out, "{},{}", cplx(*z), cplx(s?)).unwrap();
    }
    write(&a.out, &out)
}

fn cmd_model(cmd: &ModelCommand) -> Run<()> {
    match cmd {
        ModelCommand::Hilbert(a) => {
            let file: GridFile = io::parse(&read(&a.input)?)?;
            let g = file.to_grid()?;
            let k = file.kernel(&g)?;
            let root = hilbert_root(&g, &k, file.n.as_deref())?;
            let b = from_real_diag(&g.nodes);
            let comm = max_abs(&(&root * &b - &b * &root - offdiag(&k.weighted(&g)) * I));
            let q = model_quadruple(&g, &k)?;
            let d = model_defect(&g, &q);
            write_json(
                &a.out,
                &json!({
                    "root": matrix_to_json(&root),
                    "commutator_residual": comm,
                    "x": matrix_to_json(&q.x),
                    "y": matrix_to_json(&q.y),
                    "b": matrix_to_json(&q.b),
                    "a": matrix_to_json(&q.a),
                    "phi": matrix_to_json(&g.phi()),
                    "defect_offdiag": d.offdiag,
                    "defect_diagonal": d.diagonal,
                }),
            )
        }
        ModelCommand::Stieltjes(a) => {
            let file: GridFile = io::parse(&read(&a.input)?)?;
            let g = file.to_grid()?;
            let k = file.kernel(&g)?;
            let (d, antipodal) = if g.nodes.iter().all(|x| *x > 0.0) && file.n.is_none() {
                (stieltjes_anticommutator(&g, &k)?, 0.0)
            } else {
                let r = anticommutator_general(&g, &k, file.n.as_deref())?;
                (r.d, r.antipodal_defect)
            };
            let b = from_real_diag(&g.nodes);
            let res = max_abs(&(&d * &b + &b * &d + k.weighted(&g)));
            write_json(
                &a.out,
                &json!({ "d": matrix_to_json(&d), "anticommutator_residual": res, "antipodal_defect": antipodal }),
            )
        }
        ModelCommand::Anticanon(a) => {
            let file: AnticanonFile = io::parse(&read(&a.input)?)?;
            let dec = anticommuting_canonical_form(&io::matrix_from_json(&file.b)?, &io::matrix_from_json(&file.d)?)?;
            let r = dec.residuals;
            write_json(
                &a.out,
                &json!({
                    "rank": dec.rank(),
                    "e_plus": matrix_to_json(&dec.e_plus),
                    "e_minus": matrix_to_json(&dec.e_minus),
                    "e_zero": matrix_to_json(&dec.e_zero),
                    "b_minus": matrix_to_json(&dec.b_minus),
                    "gamma_abs": matrix_to_json(&dec.gamma_abs),
                    "v": matrix_to_json(&dec.v),
                    "b_zero": matrix_to_json(&dec.b_zero),
                    "d_zero": matrix_to_json(&dec.d_zero),
                    "residuals": {
                        "anticommutator": r.anticommutator,
                        "corner_plus": r.corner_plus,
                        "corner_minus": r.corner_minus,
                        "reconstruction_b": r.reconstruction_b,
                        "reconstruction_d": r.reconstruction_d,
                        "commutator": r.commutator,
                        "equivalence": r.equivalence,
                    },
                }),
            )
        }
        ModelCommand::Volterra(a) => {
            let file: VolterraFile = io::parse(&read(&a.input)?)?;
            let spec = io::ContinuousJson { l: file.l, b: file.b, a: file.a }.to_spec()?;
            let m = volterra_build(&spec, file.nodes)?;
            match &a.grid {
                Some(grid) => {
                    let pts = grid_points(grid)?;
                    let mut out = String::from("lambda_re,lambda_im,s_model_re,s_model_im,s_limit_re,s_limit_im\n");
                    let vals = sweep(&pts, |z| Ok((m.char_fn(z)?, continuous_limit_eval(&spec, z)?)));
                    for (z, v) in pts.iter().zip(vals) {
                        let (s, s0) = v?;
                        writeln!(out, "{},{},{}", cplx(*z), cplx(s), cplx(s0)).unwrap();
                    }
                    write(&a.out, &out)
                }
                None => {
                    let r = m.root_residuals();
                    write_json(
                        &a.out,
                        &json!({
                            "nodes": m.len(),
                            "h": m.h,
                            "sum_residual": m.sum_residual(),
                            "product_residual": r.product,
                            "kernel_equation_residual": m.kernel_equation_residual(&m.kernel),
                            "closed_form_kernel_residual": m.kernel_equation_residual(&m.closed_form_kernel()),
                            "w1": m.w1.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
                            "w2": m.w2.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
                        }),
                    )
                }
            }
        }
        ModelCommand::Riemann(a) => {
            let file: RiemannFile = io::parse(&read(&a.input)?)?;
            let data = file.to_data()?;
            let pts = grid_points(&a.grid)?;
            let mut out = String::from("lambda_re,lambda_im,s_riemann_re,s_riemann_im,s_direct_re,s_direct_im\n");
            for z in pts {
                let s = riemann_charfn_scalar(&data, z)?;
                let d = riemann_charfn_direct(&data, z, a.direct_nodes)?;
                writeln!(out, "{},{},{}", cplx(z), cplx(s), cplx(d)).unwrap();
            }
            write(&a.out, &out)
        }
    }
}

fn print_table(title: &str, checks: &[Check]) {
    println!("{title}");
    for ch in checks {
        println!(
            "  {:<22} {:>12.3e} <= {:<12.3e} {}",
            ch.name,
            ch.value,
            ch.tol,
            if ch.pass { "PASS" } else { "FAIL" }
        );
    }
}

fn cmd_verify(a: &VerifyArgs) -> Run<()> {
    let rule = SplitRule::parse(&a.rule)?;
    let mut ok = true;
    if let Some(path) = &a.input {
        let p = io::parse_pencil(&read(path)?)?;
        let cfg = VerifyConfig { rule: rule.clone(), samples: a.samples, seed: a.seed };
        let checks = verify::verify_pencil(&p, &cfg)?;
        print_table(&path.display().to_string(), &checks);
        ok &= verify::all_pass(&checks);
    }
    if let Some(count) = a.random {
        if a.size == 0 {
            return Err(Error::Invalid("--size must be positive".into()).into());
        }
        for (seed, checks) in verify::verify_random(count, a.size, a.seed)? {
            print_table(&format!("random n={} seed={seed}", a.size), &checks);
            ok &= verify::all_pass(&checks);
        }
    }
    if a.input.is_none() && a.random.is_none() {
        return Err(Error::Invalid("give a pencil file or --random N".into()).into());
    }
    println!("{}", if ok { "all checks passed" } else { "some checks failed" });
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn configure_threads() -> Run<()> {
    if let Ok(v) = std::env::var("PENCILKIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Invalid(format!("PENCILKIT_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Run<()> {
    configure_threads()?;
    match &cli.command {
        Command::Factor(a) => cmd_factor(a),
        Command::Charfn(a) => cmd_charfn(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Couple(a) => cmd_couple(a),
        Command::Chain(a) => cmd_chain(a),
        Command::Model(m) => cmd_model(m),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(5)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Parse => 2,
                ErrorClass::Validation => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
