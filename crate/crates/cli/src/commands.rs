//! Subcommand runners. Each validates its flags, computes, then writes once.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use htbif_core::checks;
use htbif_core::grid::DEFAULT_POINTS;
use htbif_core::linstab::{fit_expansion, morse_sweep, NodalMorse};
use htbif_core::model::w0_const;
use htbif_core::nodal::{nodal_pair, trace_loop, Branch};
use htbif_core::perturbed::{census, parse_coeff_spec, resolve, unperturbed_state, CoexistenceState, Origin};
use htbif_core::spectral::{default_ell_max, lambda_roots, mu_threshold, regime, write_roots_csv};
use htbif_core::timemap::{interior_grid, time_map, write_csv};
use htbif_core::{ModelParams, Profile};

use crate::config::{at_least, check_writable, grid_points, non_negative, pick, positive, FileConfig};
use crate::svg;
use crate::{
    BifdirArgs, Cli, Command, CriticalArgs, DiagramArgs, EigencurvesArgs, Format, MorseArgs, NodalArgs, Output,
    PerturbArgs, Shape, TimemapArgs,
};

pub const SCHEMA: &str = "htbif/1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Returns `Ok(false)` when the run completed but reported failures.
pub fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx { file };
    if cli.seed_check {
        if cli.command.is_some() {
            bail!("--seed-check does not take a subcommand");
        }
        return Ok(seed_check());
    }
    match cli.command {
        None => bail!("no subcommand given (try --help)"),
        Some(Command::Eigencurves(a)) => ctx.eigencurves(a),
        Some(Command::Critical(a)) => ctx.critical(a),
        Some(Command::Timemap(a)) => ctx.timemap(a),
        Some(Command::Nodal(a)) => ctx.nodal(a),
        Some(Command::Diagram(a)) => ctx.diagram(a),
        Some(Command::Morse(a)) => ctx.morse(a),
        Some(Command::Bifdir(a)) => ctx.bifdir(a),
        Some(Command::Perturb(a)) => ctx.perturb(a),
        Some(Command::Census(a)) => ctx.census(a),
    }?;
    Ok(true)
}

/// Desk-scale acceptance table; `true` when every check passes.
pub fn seed_check() -> bool {
    let outcomes = checks::run_all();
    let mut s = String::from("htbif seed-check: b = 1, d = 1, a = c = 1, mu = 50, lambda = 25, n_points = 2001\n");
    for o in &outcomes {
        let _ = writeln!(s, "{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(s, "passed {passed}/{}", outcomes.len());
    print!("{s}");
    let _ = std::io::stdout().flush();
    passed == outcomes.len()
}

struct Ctx {
    file: FileConfig,
}

/// Validated output target and format.
struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn new(out: &Output, cmd: &str, allowed: &[Format]) -> Result<Self> {
        let format = out.format.unwrap_or(allowed[0]);
        if !allowed.contains(&format) {
            let names: Vec<&str> = allowed.iter().map(|f| format_name(*f)).collect();
            bail!(
                "invalid value for --format: `{}` is not supported by `{cmd}` (use {})",
                format_name(format),
                names.join(" or ")
            );
        }
        if let Some(p) = &out.output {
            check_writable("output", p)?;
        }
        Ok(Sink {
            path: out.output.clone(),
            format,
        })
    }

    fn write(&self, body: &str) -> Result<()> {
        write_to(self.path.as_deref(), body)
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

fn write_to(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body).with_context(|| format!("cannot write `{}`", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_doc(command: &str, mut body: Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(command));
    if let Value::Object(m) = body.take() {
        doc.extend(m);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
    s.push('\n');
    s
}

impl Ctx {
    fn shape(&self, s: &Shape) -> Result<(f64, f64)> {
        let b = positive("b", pick("b", s.b, self.file.b, Some(1.0))?)?;
        let d = positive("d", pick("d", s.d, self.file.d, Some(1.0))?)?;
        Ok((b, d))
    }

    fn mu(&self, v: Option<f64>) -> Result<f64> {
        positive("mu", pick("mu", v, self.file.mu, None)?)
    }

    fn lambda(&self, v: Option<f64>) -> Result<f64> {
        positive("lambda", pick("lambda", v, self.file.lambda, None)?)
    }

    fn n(&self, v: Option<u32>) -> Result<u32> {
        at_least("n", pick("n", v, self.file.n, Some(1))?, 1)
    }

    fn n_points(&self, v: Option<usize>) -> Result<usize> {
        grid_points(pick("n-points", v, self.file.n_points, Some(DEFAULT_POINTS))?)
    }

    fn n_lambda(&self, v: Option<usize>, default: usize) -> Result<usize> {
        at_least("n-lambda", pick("n-lambda", v, self.file.n_lambda, Some(default))?, 1)
    }

    /// Parameters for commands that do not depend on `lambda`.
    fn params_mu(&self, s: &Shape, mu: Option<f64>) -> Result<ModelParams> {
        let (b, d) = self.shape(s)?;
        let mu = self.mu(mu)?;
        Ok(ModelParams::new(b, d, 0.5 * b * mu / d, mu)?)
    }

    fn params(&self, s: &Shape, lambda: Option<f64>, mu: Option<f64>) -> Result<ModelParams> {
        let (b, d) = self.shape(s)?;
        let mu = self.mu(mu)?;
        let lambda = self.lambda(lambda)?;
        Ok(ModelParams::new(b, d, lambda, mu)?)
    }

    fn eigencurves(&self, a: EigencurvesArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "eigencurves", &[Format::Csv, Format::Json])?;
        let p = self.params_mu(&a.shape, a.mu)?;
        let ell_max = pick("ell-max", a.ell_max, self.file.ell_max, Some(default_ell_max(&p)))?;
        let body = match sink.format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_roots_csv(&mut buf, &p, ell_max)?;
                String::from_utf8(buf)?
            }
            _ => {
                let roots: Vec<_> = (0..=ell_max).map(|l| lambda_roots(l, &p)).collect();
                json_doc("eigencurves", json!({ "b": p.b, "d": p.d, "mu": p.mu, "roots": roots }))
            }
        };
        sink.write(&body)
    }

    fn critical(&self, a: CriticalArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "critical", &[Format::Csv, Format::Json])?;
        let (b, d) = self.shape(&a.shape)?;
        let kappa_max = pick("kappa-max", a.kappa_max, self.file.kappa_max, Some(3))?;
        let p = ModelParams::new(b, d, 0.5, 1.0)?;
        let rows: Vec<(u32, f64)> = (0..=kappa_max).map(|k| (k, mu_threshold(k, &p))).collect();
        let body = match sink.format {
            Format::Csv => {
                let mut s = String::from("kappa,mu_kappa\n");
                for (k, m) in &rows {
                    let _ = writeln!(s, "{k},{}", num(*m));
                }
                s
            }
            _ => {
                let list: Vec<Value> = rows.iter().map(|(k, m)| json!({ "kappa": k, "mu_kappa": m })).collect();
                json_doc("critical", json!({ "b": b, "d": d, "thresholds": list }))
            }
        };
        sink.write(&body)
    }

    fn timemap(&self, a: TimemapArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "timemap", &[Format::Csv, Format::Json])?;
        let p = self.params(&a.shape, a.lambda, a.mu)?;
        let samples = at_least("samples", pick("samples", a.samples, self.file.samples, Some(200))?, 1)?;
        let w0 = w0_const(&p).context("timemap needs lambda < b mu/d (check --lambda and --mu)")?;
        let rows = interior_grid(w0, samples)
            .into_iter()
            .map(|wm| time_map(wm, &p))
            .collect::<Result<Vec<_>, _>>()
            .context("timemap")?;
        let body = match sink.format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_csv(&mut buf, &rows)?;
                String::from_utf8(buf)?
            }
            _ => json_doc(
                "timemap",
                json!({ "lambda": p.lambda, "mu": p.mu, "w0": w0, "samples": rows }),
            ),
        };
        sink.write(&body)
    }

    fn nodal(&self, a: NodalArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "nodal", &[Format::Csv, Format::Json])?;
        let p = self.params(&a.shape, a.lambda, a.mu)?;
        let n = self.n(a.n)?;
        let n_points = self.n_points(a.n_points)?;
        let (lo, up) = nodal_pair(n, &p, n_points)
            .with_context(|| format!("nodal: no mode-{n} pair at --lambda {} --mu {}", p.lambda, p.mu))?;
        let body = match sink.format {
            Format::Csv => {
                let mut s = String::from("x,w_lower,w_upper\n");
                for i in 0..n_points {
                    let _ = writeln!(
                        s,
                        "{},{},{}",
                        num(lo.profile.x(i)),
                        num(lo.profile.values()[i]),
                        num(up.profile.values()[i])
                    );
                }
                s
            }
            _ => json_doc("nodal", json!({ "lower": lo, "upper": up })),
        };
        sink.write(&body)
    }

    fn diagram(&self, a: DiagramArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "diagram", &[Format::Csv, Format::Json, Format::Svg])?;
        if let Some(p) = &a.svg {
            check_writable("svg", p)?;
        }
        let p = self.params_mu(&a.shape, a.mu)?;
        let n_lambda = self.n_lambda(a.n_lambda, 100)?;
        let kappa = regime(&p);
        let loops = (1..=kappa)
            .map(|n| trace_loop(n, &p, n_lambda))
            .collect::<Result<Vec<_>, _>>()
            .context("diagram")?;
        for t in &loops {
            for f in &t.failures {
                eprintln!("htbif: warning: C{} skipped lambda = {}: {}", t.n, f.lambda, f.error);
            }
        }
        let picture = svg::diagram(p.beta(), p.mu, &loops);
        if let Some(path) = &a.svg {
            write_to(Some(path), &picture)?;
        }
        let body = match sink.format {
            Format::Svg => picture,
            Format::Csv => {
                let mut s =
                    String::from("n,lambda,w_minus_lower,sup_norm_lower,sup_norm_upper,w_plus_upper,limit\n");
                for t in &loops {
                    for q in &t.points {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{}",
                            t.n,
                            num(q.lambda),
                            num(q.w_minus_lower),
                            num(q.sup_norm_lower),
                            num(q.sup_norm_upper),
                            num(q.w_plus_upper),
                            q.limit
                        );
                    }
                }
                s
            }
            Format::Json => json_doc(
                "diagram",
                json!({ "b": p.b, "d": p.d, "mu": p.mu, "kappa": kappa, "loops": loops }),
            ),
        };
        sink.write(&body)
    }

    fn morse(&self, a: MorseArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "morse", &[Format::Csv, Format::Json])?;
        let p = self.params_mu(&a.shape, a.mu)?;
        let n = self.n(a.n)?;
        let n_lambda = self.n_lambda(a.n_lambda, 50)?;
        let n_points = self.n_points(a.n_points)?;
        let sweep = morse_sweep(n, &p, n_lambda, n_points)
            .with_context(|| format!("morse: no window for mode {n} at --mu {}", p.mu))?;
        let mut rows: Vec<(f64, &'static str, NodalMorse)> = Vec::new();
        let mut failures = Vec::new();
        for (l, r) in sweep {
            match r {
                Ok(m) => {
                    rows.push((l, "constant", m.constant));
                    rows.push((l, "lower", m.lower));
                    rows.push((l, "upper", m.upper));
                }
                Err(e) => {
                    eprintln!("htbif: warning: morse skipped lambda = {l}: {e}");
                    failures.push(json!({ "lambda": l, "error": e.to_string() }));
                }
            }
        }
        let body = match sink.format {
            Format::Csv => {
                let mut s = String::from("lambda,branch,morse_index,tau_low,tau_high\n");
                for (l, b, m) in &rows {
                    let _ = writeln!(s, "{},{b},{},{},{}", num(*l), m.index, num(m.tau_low), num(m.tau_high));
                }
                s
            }
            _ => {
                let list: Vec<Value> = rows
                    .iter()
                    .map(|(l, b, m)| {
                        json!({ "lambda": l, "branch": b, "morse_index": m.index,
                                "tau_low": m.tau_low, "tau_high": m.tau_high, "degenerate": m.degenerate })
                    })
                    .collect();
                json_doc("morse", json!({ "n": n, "mu": p.mu, "rows": list, "failures": failures }))
            }
        };
        sink.write(&body)
    }

    fn bifdir(&self, a: BifdirArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "bifdir", &[Format::Json])?;
        let p = self.params_mu(&a.shape, a.mu)?;
        let n = self.n(a.n)?;
        let side = match (a.side, &self.file.side) {
            (Some(s), _) => s,
            (None, Some(s)) => s.parse().map_err(|e| anyhow::anyhow!("invalid value for --side: {e}"))?,
            (None, None) => bail!("missing required flag --side"),
        };
        let check = fit_expansion(n, side, &p)
            .with_context(|| format!("bifdir: expansion at lambda_{n}^{side} for --mu {}", p.mu))?;
        sink.write(&json_doc("bifdir", json!({ "mu": p.mu, "expansion": check })))
    }

    fn perturbed_params(&self, a: &PerturbArgs) -> Result<(ModelParams, u32, usize)> {
        let p = self.params(&a.shape, a.lambda, a.mu)?;
        let eps = non_negative("eps", pick("eps", a.eps, self.file.eps, None)?)?;
        let spec_a = pick("a", a.a.clone(), self.file.a.clone(), Some("const:1".into()))?;
        let spec_c = pick("c", a.c.clone(), self.file.c.clone(), Some("const:1".into()))?;
        let ca = parse_coeff_spec(&spec_a).with_context(|| format!("invalid value for --a: `{spec_a}`"))?;
        let cc = parse_coeff_spec(&spec_c).with_context(|| format!("invalid value for --c: `{spec_c}`"))?;
        let n = self.n(a.n)?;
        let n_points = self.n_points(a.n_points)?;
        Ok((p.with_eps(eps).with_coeffs(ca, cc), n, n_points))
    }

    fn perturb(&self, a: PerturbArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "perturb", &[Format::Json])?;
        let (p, n, n_points) = self.perturbed_params(&a)?;
        let p0 = p.with_eps(0.0);
        let (lo, up) = nodal_pair(n, &p0, n_points)
            .with_context(|| format!("perturb: no mode-{n} pair at --lambda {} --mu {}", p.lambda, p.mu))?;
        let seeds: [(Origin, Profile); 3] = [
            (Origin::Constant, Profile::constant(n_points, w0_const(&p0)?)?),
            (Origin::Nodal { n, branch: Branch::Lower }, lo.profile),
            (Origin::Nodal { n, branch: Branch::Upper }, up.profile),
        ];
        let mut states = Vec::new();
        let mut failures = Vec::new();
        for (origin, w) in seeds {
            match unperturbed_state(&w, &p0, origin).and_then(|s| resolve(&s, &p, origin)) {
                Ok(s) => states.push(state_json(&s, &p0)?),
                Err(e) => failures.push(json!({ "origin": origin, "error": e.to_string() })),
            }
        }
        sink.write(&json_doc(
            "perturb",
            json!({ "lambda": p.lambda, "mu": p.mu, "eps": p.eps, "n": n,
                    "states": states, "failures": failures }),
        ))
    }

    fn census(&self, a: PerturbArgs) -> Result<()> {
        let sink = Sink::new(&a.out, "census", &[Format::Json])?;
        let (p, n, n_points) = self.perturbed_params(&a)?;
        let r = census(n, &p, n_points)
            .with_context(|| format!("census at --lambda {} --mu {} --n {n}", p.lambda, p.mu))?;
        let body = serde_json::to_value(&r)?;
        sink.write(&json_doc("census", body))
    }
}

fn state_json(s: &CoexistenceState, p0: &ModelParams) -> Result<Value> {
    let w0 = w0_const(p0)?;
    Ok(json!({
        "origin": s.origin,
        "residual_sup": s.residual_sup,
        "newton_iters": s.newton_iters,
        "crossings": s.crossings(w0),
        "positive": s.is_positive(),
        "w": s.w.values(),
        "v": s.v.values(),
    }))
}
