//! Points of the compactified generalized Jacobian and the `U0`/`U1`
//! trivialisation charts of each compactified coordinate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::theta::MultiIndexSet;
use crate::C64;

/// Which coordinates are expressed in the chart at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChartIndex {
    pub xi_at_infinity: MultiIndexSet,
    pub zeta_at_infinity: MultiIndexSet,
}

impl ChartIndex {
    /// All coordinates in `U0`.
    pub fn finite(m: usize, n: usize) -> Self {
        ChartIndex {
            xi_at_infinity: MultiIndexSet::empty(m),
            zeta_at_infinity: MultiIndexSet::empty(n),
        }
    }

    /// All coordinates in `U1`.
    pub fn all_infinite(m: usize, n: usize) -> Self {
        ChartIndex {
            xi_at_infinity: MultiIndexSet::full(m),
            zeta_at_infinity: MultiIndexSet::full(n),
        }
    }

    pub fn m(&self) -> usize {
        self.xi_at_infinity.universe()
    }

    pub fn n(&self) -> usize {
        self.zeta_at_infinity.universe()
    }

    /// Parses `"x:0,2;z:1"`-style specs: `x` lists exp-xi indices in `U1`,
    /// `z` lists zeta indices in `U1`. Also accepts `"U0"` and `"U1"`.
    pub fn parse(spec: &str, m: usize, n: usize) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "" | "U0" | "u0" => return Ok(Self::finite(m, n)),
            "U1" | "u1" => return Ok(Self::all_infinite(m, n)),
            _ => {}
        }
        let mut chart = Self::finite(m, n);
        for part in spec.split(';').filter(|s| !s.trim().is_empty()) {
            let (key, list) = part.split_once(':').ok_or_else(|| {
                Error::parse("chart", format!("expected `x:..` or `z:..`, got `{part}`"))
            })?;
            let (set, size) = match key.trim() {
                "x" => (&mut chart.xi_at_infinity, m),
                "z" => (&mut chart.zeta_at_infinity, n),
                other => {
                    return Err(Error::parse(
                        "chart",
                        format!("unknown coordinate family `{other}`"),
                    ))
                }
            };
            for tok in list.split(',').filter(|s| !s.trim().is_empty()) {
                let idx: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("chart", format!("bad index `{tok}`")))?;
                if idx >= size {
                    return Err(Error::parse(
                        "chart",
                        format!("index {idx} out of range 0..{size}"),
                    ));
                }
                set.insert(idx);
            }
        }
        Ok(chart)
    }
}

impl std::fmt::Display for ChartIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let list = |s: &MultiIndexSet| {
            s.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "x:{};z:{}",
            list(&self.xi_at_infinity),
            list(&self.zeta_at_infinity)
        )
    }
}

impl Serialize for ChartIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ChartIndex", 2)?;
        st.serialize_field(
            "xi_at_infinity",
            &self.xi_at_infinity.iter().collect::<Vec<_>>(),
        )?;
        st.serialize_field(
            "zeta_at_infinity",
            &self.zeta_at_infinity.iter().collect::<Vec<_>>(),
        )?;
        st.end()
    }
}

/// Value of the Abel map, stored as finite chart representatives: `exp xi`
/// or `exp(-xi)`, `zeta` or `1/zeta` depending on the chart, and the
/// holomorphic coordinates `z` unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelPoint {
    pub exp_xi: Vec<C64>,
    pub zeta: Vec<C64>,
    pub z: Vec<C64>,
    pub chart: ChartIndex,
}

fn inverse(p: Point) -> C64 {
    match p {
        Point::Infinity => C64::new(0.0, 0.0),
        Point::Finite(v) => 1.0 / v,
    }
}

impl AbelPoint {
    /// Builds a point from coordinate values on the Riemann sphere, putting
    /// each coordinate with modulus above one (or infinite) in `U1`.
    pub fn from_values(exp_xi: &[Point], zeta: &[Point], z: Vec<C64>) -> Self {
        let mut chart = ChartIndex::finite(exp_xi.len(), zeta.len());
        let pick = |vals: &[Point], set: &mut MultiIndexSet| -> Vec<C64> {
            vals.iter()
                .enumerate()
                .map(|(k, v)| match v {
                    Point::Finite(c) if c.norm() <= 1.0 => *c,
                    other => {
                        set.insert(k);
                        inverse(*other)
                    }
                })
                .collect()
        };
        let xs = pick(exp_xi, &mut chart.xi_at_infinity);
        let zs = pick(zeta, &mut chart.zeta_at_infinity);
        AbelPoint {
            exp_xi: xs,
            zeta: zs,
            z,
            chart,
        }
    }

    fn value(rep: C64, at_inf: bool) -> Point {
        if !at_inf {
            Point::Finite(rep)
        } else if rep == C64::new(0.0, 0.0) {
            Point::Infinity
        } else {
            Point::Finite(1.0 / rep)
        }
    }

    /// `exp xi_j` on the Riemann sphere.
    pub fn exp_xi_value(&self, j: usize) -> Point {
        Self::value(self.exp_xi[j], self.chart.xi_at_infinity.contains(j))
    }

    /// `zeta_i` on the Riemann sphere.
    pub fn zeta_value(&self, i: usize) -> Point {
        Self::value(self.zeta[i], self.chart.zeta_at_infinity.contains(i))
    }

    /// Re-expresses the point in another chart; fails if a coordinate that
    /// is infinite (resp. zero) would need `U0` (resp. the inverse in `U1`).
    pub fn to_chart(&self, target: ChartIndex) -> Result<AbelPoint> {
        if target.m() != self.chart.m() || target.n() != self.chart.n() {
            return Err(Error::Chart(
                "chart has the wrong number of coordinates".into(),
            ));
        }
        let convert = |vals: &[Point], set: &MultiIndexSet, kind: &str| -> Result<Vec<C64>> {
            vals.iter()
                .enumerate()
                .map(|(k, v)| match (set.contains(k), v) {
                    (false, Point::Finite(c)) => Ok(*c),
                    (false, Point::Infinity) => Err(Error::Chart(format!(
                        "{kind}[{k}] is infinite but the chart puts it in U0"
                    ))),
                    (true, Point::Infinity) => Ok(C64::new(0.0, 0.0)),
                    (true, Point::Finite(c)) if *c == C64::new(0.0, 0.0) => Err(Error::Chart(
                        format!("{kind}[{k}] is zero, so it has no representative in U1"),
                    )),
                    (true, Point::Finite(c)) => Ok(1.0 / c),
                })
                .collect()
        };
        let xi_vals: Vec<Point> = (0..self.exp_xi.len())
            .map(|j| self.exp_xi_value(j))
            .collect();
        let zeta_vals: Vec<Point> = (0..self.zeta.len()).map(|i| self.zeta_value(i)).collect();
        Ok(AbelPoint {
            exp_xi: convert(&xi_vals, &target.xi_at_infinity, "exp_xi")?,
            zeta: convert(&zeta_vals, &target.zeta_at_infinity, "zeta")?,
            z: self.z.clone(),
            chart: target,
        })
    }
}

/// Factor that turns a section value trivialised in chart `from` into the
/// value trivialised in chart `to` at the point `ap`: divide by `exp xi_j`
/// (resp. `zeta_i`) for coordinates entering `U1`, multiply for those leaving.
pub fn transition_factor(from: &ChartIndex, to: &ChartIndex, ap: &AbelPoint) -> Result<C64> {
    let mut factor = C64::new(1.0, 0.0);
    let mut apply = |from_set: &MultiIndexSet,
                     to_set: &MultiIndexSet,
                     value: &dyn Fn(usize) -> Point,
                     kind: &str|
     -> Result<()> {
        for k in 0..from_set.universe() {
            let (a, b) = (from_set.contains(k), to_set.contains(k));
            if a == b {
                continue;
            }
            let v = match value(k) {
                Point::Finite(c) if c != C64::new(0.0, 0.0) => c,
                _ => {
                    return Err(Error::Chart(format!(
                        "{kind}[{k}] is 0 or infinite; the charts do not overlap there"
                    )))
                }
            };
            factor *= if b { 1.0 / v } else { v };
        }
        Ok(())
    };
    apply(
        &from.xi_at_infinity,
        &to.xi_at_infinity,
        &|j| ap.exp_xi_value(j),
        "exp_xi",
    )?;
    apply(
        &from.zeta_at_infinity,
        &to.zeta_at_infinity,
        &|i| ap.zeta_value(i),
        "zeta",
    )?;
    Ok(factor)
}
