use std::f64::consts::PI;
use std::fs;

use gjtheta::gen_theta::{
    check_cusp_b_shift, check_node_b_shift, check_section_periodicity, gen_theta_general,
    gen_theta_rational,
};
use gjtheta::harness::{find_zeros, random_shifts, verify_abel_theorem};
use gjtheta::periods::{build_period_data, validate_periods};
use gjtheta::rational::abel_map_p1;
use gjtheta::theta::{check_coefficient_periodicity, check_derivative_periodicity};
use gjtheta::{
    genus_accounting, parse_curve_spec, AbelPoint, ChartIndex, CurveSpec, Error, GenusReport,
    MultiIndexSet, PeriodData, Point, Result, ShiftParams, TorusCurve, TruncationPolicy, C64,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig, ShiftSource};
use crate::values;

/// What a run produces; nothing is written until the whole run succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: String,
    pub csv: Option<String>,
}

#[derive(Serialize)]
struct Header {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    eps: f64,
}

struct Context {
    curve: CurveSpec,
    genus: GenusReport,
    periods: Option<PeriodData>,
    torus: Option<TorusCurve>,
    pol: TruncationPolicy,
}

fn read(field: &str, path: &std::path::Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        field: field.into(),
        message: format!("cannot read {}: {e}", path.display()),
    })
}

impl Context {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let curve = parse_curve_spec(&read("input", &cfg.input_path)?)?;
        let genus = genus_accounting(&curve);
        let pol = cfg
            .eps
            .map(TruncationPolicy::with_epsilon)
            .unwrap_or_default();
        let mut periods = match &cfg.periods_path {
            Some(p) => {
                let pd = PeriodData::parse(&read("periods", p)?)?;
                pd.check_dimensions(genus.g_tilde as usize, genus.m, genus.n)?;
                Some(pd)
            }
            None => None,
        };
        let torus = if curve.base_genus == 1 {
            let tc = TorusCurve::new(&curve)?.with_policy(pol);
            periods.get_or_insert_with(|| build_period_data(&tc));
            Some(tc)
        } else {
            None
        };
        Ok(Context {
            curve,
            genus,
            periods,
            torus,
            pol,
        })
    }

    fn g(&self) -> usize {
        self.genus.g_tilde as usize
    }

    fn periods(&self) -> Result<&PeriodData> {
        self.periods.as_ref().ok_or_else(|| {
            Error::Validation(format!(
                "base genus {} needs period data (--periods)",
                self.genus.g_tilde
            ))
        })
    }

    fn header(&self, command: Command, seed: Option<u64>) -> Header {
        Header {
            tool: "gjtheta",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            seed,
            eps: self.pol.epsilon,
        }
    }
}

/// Abel-map value with every coordinate on the Riemann sphere.
#[derive(Serialize)]
struct AbelView {
    exp_xi: Vec<Point>,
    zeta: Vec<Point>,
    z: Vec<C64>,
}

impl From<&AbelPoint> for AbelView {
    fn from(ap: &AbelPoint) -> Self {
        AbelView {
            exp_xi: (0..ap.exp_xi.len()).map(|j| ap.exp_xi_value(j)).collect(),
            zeta: (0..ap.zeta.len()).map(|i| ap.zeta_value(i)).collect(),
            z: ap.z.clone(),
        }
    }
}

fn sized(field: &str, text: &Option<String>, len: usize, default: C64) -> Result<Vec<C64>> {
    match text {
        None => Ok(vec![default; len]),
        Some(t) => {
            let v = values::complex_list(field, t)?;
            if v.len() != len {
                return Err(Error::Validation(format!(
                    "--{field} needs {len} entries, got {}",
                    v.len()
                )));
            }
            Ok(v)
        }
    }
}

/// The single shift of `theta-eval` and `zeros`, and the seed if it was drawn.
fn single_shift(
    cfg: &RunConfig,
    ctx: &Context,
    identity_default: bool,
) -> Result<(ShiftParams, Option<u64>)> {
    let (m, n, g) = (ctx.genus.m, ctx.genus.n, ctx.g());
    match &cfg.shifts {
        ShiftSource::Explicit { a, b, lambda } => {
            let a = sized("a", a, m, C64::new(1.0, 0.0))?;
            if a.iter().any(|v| v.norm() == 0.0) {
                return Err(Error::Validation("--a entries must be nonzero".into()));
            }
            let b = sized("b", b, n, C64::new(0.0, 0.0))?;
            let lambda = sized("lambda", lambda, g, C64::new(0.0, 0.0))?;
            Ok((ShiftParams::new(a, b, lambda)?, None))
        }
        ShiftSource::Random { .. } if identity_default => {
            Ok((ShiftParams::identity(m, n, g), None))
        }
        ShiftSource::Random { seed, .. } => {
            Ok((random_shifts(m, n, g, 1, *seed).remove(0), Some(*seed)))
        }
    }
}

fn torus_parameter(p: Point) -> Result<C64> {
    p.as_finite()
        .ok_or_else(|| Error::Validation("points of a torus are finite complex numbers".into()))
}

fn abel_at(ctx: &Context, p: Point) -> Result<AbelPoint> {
    match &ctx.torus {
        _ if ctx.curve.base_genus == 0 => abel_map_p1(&ctx.curve, p),
        Some(tc) => tc.abel_map(torus_parameter(p)?),
        None => Err(Error::Validation(
            "the Abel map of a point needs base genus 0 or 1; give --exp-xi, --zeta and --z instead".into(),
        )),
    }
}

fn given_abel_point(cfg: &RunConfig, ctx: &Context) -> Result<Option<AbelPoint>> {
    if cfg.abel.iter().all(Option::is_none) {
        return Ok(None);
    }
    let [xi, zeta, z] = &cfg.abel;
    let list = |field: &str, t: &Option<String>, len: usize| -> Result<Vec<Point>> {
        let v = match t {
            Some(t) => values::point_list(field, t)?,
            None => Vec::new(),
        };
        if v.len() != len {
            return Err(Error::Validation(format!(
                "--{field} needs {len} entries, got {}",
                v.len()
            )));
        }
        Ok(v)
    };
    let xs = list("exp-xi", xi, ctx.genus.m)?;
    let zs = list("zeta", zeta, ctx.genus.n)?;
    let zz = sized("z", z, ctx.g(), C64::new(0.0, 0.0))?;
    Ok(Some(AbelPoint::from_values(&xs, &zs, zz)))
}

fn chart_or(cfg: &RunConfig, ctx: &Context, default: ChartIndex) -> Result<ChartIndex> {
    match &cfg.chart {
        Some(spec) => ChartIndex::parse(spec, ctx.genus.m, ctx.genus.n),
        None => Ok(default),
    }
}

fn theta_eval(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let (shift, seed) = single_shift(cfg, ctx, true)?;
    let point = cfg
        .point
        .as_deref()
        .map(|t| values::point("point", t))
        .transpose()?;
    let ap = match (point, given_abel_point(cfg, ctx)?) {
        (Some(_), Some(_)) => {
            return Err(Error::Validation(
                "give either --point or Abel coordinates, not both".into(),
            ))
        }
        (Some(p), None) => abel_at(ctx, p)?,
        (None, Some(ap)) => ap,
        (None, None) => {
            return Err(Error::Parse {
                field: "point".into(),
                message: "theta-eval needs --point or --exp-xi/--zeta/--z".into(),
            })
        }
    };
    let chart = chart_or(cfg, ctx, ap.chart)?;
    let value = if ctx.curve.base_genus == 0 {
        gen_theta_rational(&ctx.curve, &ap, &shift, &chart)?
    } else {
        gen_theta_general(&ap, ctx.periods()?, &shift, &chart, &ctx.pol)?
    };
    Ok(json!({
        "header": ctx.header(Command::ThetaEval, seed),
        "genus": ctx.genus,
        "shift": shift,
        "point": point,
        "abel_point": AbelView::from(&ap),
        "theta": value,
    }))
}

fn path_points(cfg: &RunConfig) -> Result<Vec<Point>> {
    let text = cfg
        .path
        .as_deref()
        .or(cfg.point.as_deref())
        .ok_or_else(|| Error::Parse {
            field: "path".into(),
            message: "abel-map needs --path".into(),
        })?;
    let vertices = values::point_list("path", text)?;
    let mut out = Vec::new();
    for (k, v) in vertices.iter().enumerate() {
        out.push(*v);
        let Some(next) = vertices.get(k + 1) else {
            break;
        };
        if let (Point::Finite(a), Point::Finite(b)) = (v, next) {
            for s in 1..=cfg.steps {
                let t = s as f64 / (cfg.steps + 1) as f64;
                out.push(Point::Finite(a + (b - a) * t));
            }
        }
    }
    Ok(out)
}

/// `log` of `e` on the branch closest to `prev`.
fn continued_log(e: Point, prev: Option<C64>) -> Option<C64> {
    let e = e.as_finite().filter(|v| v.norm() > 0.0)?;
    let l = e.ln();
    Some(match prev {
        None => l,
        Some(p) => {
            let k = ((p.im - l.im) / (2.0 * PI)).round();
            l + C64::new(0.0, 2.0 * PI * k)
        }
    })
}

fn abel_map(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let points = path_points(cfg)?;
    let mut branch: Vec<Option<C64>> = vec![None; ctx.genus.m];
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let ap = abel_at(ctx, p)?;
        let view = AbelView::from(&ap);
        for (j, b) in branch.iter_mut().enumerate() {
            *b = continued_log(view.exp_xi[j], *b);
        }
        rows.push(json!({
            "point": p,
            "exp_xi": view.exp_xi,
            "xi": branch.clone(),
            "zeta": view.zeta,
            "z": view.z,
        }));
    }
    Ok(json!({
        "header": ctx.header(Command::AbelMap, None),
        "genus": ctx.genus,
        "rows": rows,
    }))
}

fn zeros(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let (shift, seed) = single_shift(cfg, ctx, false)?;
    let zs = find_zeros(&ctx.curve, ctx.periods.as_ref(), &shift, &ctx.pol)?;
    Ok(json!({
        "header": ctx.header(Command::Zeros, seed),
        "genus": ctx.genus,
        "shift": shift,
        "zeros": zs,
    }))
}

fn verify(cfg: &RunConfig, ctx: &Context) -> Result<(Value, String)> {
    let ShiftSource::Random { count, seed } = cfg.shifts else {
        return Err(Error::Validation(
            "verify draws its shifts from --shifts and --seed".into(),
        ));
    };
    let shifts = random_shifts(ctx.genus.m, ctx.genus.n, ctx.g(), count, seed);
    let report = verify_abel_theorem(&ctx.curve, ctx.periods.as_ref(), &shifts, &ctx.pol)?;
    let csv = report.to_csv(ctx.periods.as_ref());
    let counts: Vec<usize> = report.shifts.iter().map(|s| s.zeros.total_count).collect();
    let value = json!({
        "header": ctx.header(Command::Verify, Some(seed)),
        "genus": ctx.genus,
        "summary": {
            "shifts": count,
            "zero_counts": counts,
            "expected_count": ctx.genus.section_degree,
            "theorem_count": ctx.genus.g_arith,
            "max_deviation": report.max_deviation,
            "max_deviation_explicit": report.max_deviation_explicit,
            "max_contour_residual": report.max_contour_residual,
            "kappa": report.kappa,
        },
        "report": report,
    });
    Ok((value, csv))
}

fn in_disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::from_polar(r * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>())
}

fn column_periods(pd: &PeriodData, xi_cols: &[usize], zeta_cols: &[usize]) -> Result<PeriodData> {
    let g = pd.genus();
    let pick =
        |m: &DMatrix<C64>, cols: &[usize]| DMatrix::from_fn(g, cols.len(), |r, k| m[(r, cols[k])]);
    PeriodData::new(
        pd.z.matrix().clone(),
        pick(&pd.y, xi_cols),
        pick(&pd.w, zeta_cols),
        pick(&pd.nu, xi_cols),
    )
}

#[derive(Serialize)]
struct LemmaRow {
    identity: &'static str,
    alpha: usize,
    /// Derivative directions, or the column of the node or cusp.
    index: Vec<usize>,
    residual: f64,
}

fn lemma_rows(
    pd: &PeriodData,
    pol: &TruncationPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LemmaRow>> {
    let (g, m, n) = (pd.genus(), pd.m(), pd.n());
    let rows_w = pd.w_rows();
    let z: Vec<C64> = (0..g).map(|_| in_disk(rng, 0.5)).collect();
    let shift = ShiftParams::new(
        (0..m).map(|_| in_disk(rng, 1.0).exp()).collect(),
        (0..n).map(|_| in_disk(rng, 1.0)).collect(),
        (0..g).map(|_| in_disk(rng, 0.3)).collect(),
    )?;
    let exp_xi: Vec<C64> = (0..m).map(|_| in_disk(rng, 1.0).exp()).collect();
    let zeta: Vec<C64> = (0..n).map(|_| in_disk(rng, 1.0)).collect();
    let mut out = Vec::new();
    for alpha in 0..g {
        for set in MultiIndexSet::full(n).subsets().filter(|s| s.len() <= 3) {
            let index: Vec<usize> = set.iter().collect();
            out.push(LemmaRow {
                identity: "derivative",
                alpha,
                index: index.clone(),
                residual: check_derivative_periodicity(&set, alpha, &z, &pd.z, &rows_w, pol)?,
            });
            out.push(LemmaRow {
                identity: "coefficient",
                alpha,
                index,
                residual: check_coefficient_periodicity(&set, alpha, &z, &pd.z, &rows_w, pol)?,
            });
        }
        out.push(LemmaRow {
            identity: "section",
            alpha,
            index: Vec::new(),
            residual: check_section_periodicity(&exp_xi, &zeta, &z, pd, &shift, alpha, pol)?,
        });
        for j in 0..m {
            let node = column_periods(pd, &[j], &[])?;
            let s = ShiftParams::new(vec![shift.a[j]], vec![], shift.lambda.clone())?;
            out.push(LemmaRow {
                identity: "node",
                alpha,
                index: vec![j],
                residual: check_node_b_shift(exp_xi[j].ln(), &z, &node, &s, alpha, pol)?,
            });
        }
        for i in 0..n {
            let cusp = column_periods(pd, &[], &[i])?;
            let s = ShiftParams::new(vec![], vec![shift.b[i]], shift.lambda.clone())?;
            out.push(LemmaRow {
                identity: "cusp",
                alpha,
                index: vec![i],
                residual: check_cusp_b_shift(zeta[i], &z, &cusp, &s, alpha, pol)?,
            });
        }
    }
    Ok(out)
}

fn lemmas(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let pd = ctx.periods()?;
    if pd.genus() == 0 {
        return Err(Error::Validation(
            "quasi-periodicity needs base genus at least 1".into(),
        ));
    }
    let samples = cfg.count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = lemma_rows(pd, &ctx.pol, &mut rng)?;
    for _ in 1..samples {
        for (row, new) in table.iter_mut().zip(lemma_rows(pd, &ctx.pol, &mut rng)?) {
            row.residual = row.residual.max(new.residual);
        }
    }
    let max = table.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(json!({
        "header": ctx.header(Command::Lemmas, Some(cfg.seed)),
        "genus": ctx.genus,
        "samples": samples,
        "max_residual": max,
        "rows": table,
    }))
}

fn validate(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let periods = match (&cfg.periods_path, &ctx.periods) {
        (Some(_), Some(pd)) => Some(validate_periods(pd)?),
        _ => None,
    };
    Ok(json!({
        "header": ctx.header(Command::Validate, None),
        "genus": ctx.genus,
        "periods": periods,
    }))
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts> {
    let ctx = Context::load(cfg)?;
    let (report, csv) = match cfg.command {
        Command::Validate => (validate(cfg, &ctx)?, None),
        Command::ThetaEval => (theta_eval(cfg, &ctx)?, None),
        Command::AbelMap => (abel_map(cfg, &ctx)?, None),
        Command::Zeros => (zeros(cfg, &ctx)?, None),
        Command::Verify => {
            let (v, csv) = verify(cfg, &ctx)?;
            (v, Some(csv))
        }
        Command::Lemmas => (lemmas(cfg, &ctx)?, None),
    };
    Ok(Artifacts {
        report: render(&report),
        csv,
    })
}
