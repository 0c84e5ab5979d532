//! Scenario file schema. Unknown keys are rejected so that typos cannot
//! silently weaken a verification claim.

use serde::Deserialize;
use srf_core::expr::Expr;
use srf_core::flowcheck::TdMmSpace;
use srf_core::space::{parse_space_file, DiscreteGeodesicSpace, TimeGrid};
use srf_core::transport::ProbabilityVector;
use srf_core::{Error, Real};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub timegrid: Option<TimeGridSpec>,
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
    pub weights: Option<WeightSpec>,
    pub generator: Option<GeneratorSpec>,
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    pub tolerances: Option<ToleranceSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub times: Option<Vec<Real>>,
    pub start: Option<Real>,
    pub stop: Option<Real>,
    pub steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub builder: String,
    pub n: Option<usize>,
    /// Expression in `t` for the circle circumference / interval length.
    pub size: Option<String>,
    pub file: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: String,
    pub at: Option<usize>,
    pub center: Option<usize>,
    pub width: Option<Real>,
    pub weights: Option<Vec<Real>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    /// Expression in `x` (first vertex coordinate) and `t`.
    pub expr: Option<String>,
    /// Table indexed `[time][vertex]`.
    pub table: Option<Vec<Vec<Real>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub builder: String,
    pub n: Option<usize>,
    pub scale: Option<String>,
    pub mesh: Option<Real>,
    pub matrices: Option<Vec<Vec<Vec<Real>>>>,
    pub markov: Option<bool>,
    pub substeps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub metric: String,
    pub dim: Option<usize>,
    pub radius: Option<Real>,
    pub scale: Option<String>,
    pub scale_dot: Option<String>,
    pub weight: Option<String>,
    #[serde(rename = "box")]
    pub chart_box: Vec<Vec<Real>>,
    pub samples_per_axis: Option<usize>,
    pub fd_step: Option<Real>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub op: String,
    pub id: Option<String>,
    pub t_index: Option<usize>,
    pub s_index: Option<usize>,
    pub pairs: Option<Vec<(String, String)>>,
    pub tau_points: Option<usize>,
    pub tol: Option<Real>,
    pub n: Option<Real>,
    pub lambda: Option<toml::Value>,
    pub epsilon: Option<Real>,
    pub k: Option<Real>,
    pub k_prime: Option<Real>,
    pub partition: Option<Vec<Vec<usize>>>,
    pub covering: Option<Vec<Vec<usize>>>,
    pub set_pairs: Option<Vec<(Vec<usize>, Vec<usize>)>>,
    pub j: Option<(usize, usize)>,
    pub form: Option<String>,
    pub potential: Option<PotentialSpec>,
    pub trajectory: Option<Vec<usize>>,
    pub comparisons: Option<Vec<usize>>,
    pub terminal: Option<Vec<Real>>,
    pub terminals: Option<Vec<Vec<Real>>>,
    pub terminal_time: Option<Real>,
    pub dt: Option<Real>,
    /// Path prefix for coupling CSV export (wasserstein op).
    pub export_couplings: Option<String>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    pub coeff: Option<Real>,
    pub center: Option<Real>,
    pub values: Option<Vec<Vec<Real>>>,
    /// Expression in `x`, `y`, `z`, `t` for chart potentials.
    pub expr: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub default: Option<Real>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Scenario, Vec<u8>), Error> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config("scenario is not utf-8".into()))?;
        Ok((Self::parse(&text)?, bytes))
    }

    pub fn default_tol(&self) -> Real {
        self.tolerances.as_ref().and_then(|t| t.default).unwrap_or(1e-6)
    }

    pub fn build_grid(&self) -> Result<TimeGrid<Real>, Error> {
        let spec = self
            .timegrid
            .as_ref()
            .ok_or_else(|| Error::Config("missing [timegrid]".into()))?;
        if let Some(times) = &spec.times {
            return TimeGrid::new(times.clone());
        }
        match (spec.start, spec.stop, spec.steps) {
            (Some(a), Some(b), Some(s)) => TimeGrid::uniform(a, b, s),
            _ => Err(Error::Config("timegrid needs either times or start/stop/steps".into())),
        }
    }

    pub fn build_space(&self, base_dir: &Path) -> Result<DiscreteGeodesicSpace<Real>, Error> {
        let spec = self.space.as_ref().ok_or_else(|| Error::Config("missing [space]".into()))?;
        match spec.builder.as_str() {
            "circle" => {
                let grid = self.build_grid()?;
                let n = spec.n.ok_or_else(|| Error::Config("circle needs n".into()))?;
                let size = compile_time_expr(spec.size.as_deref().unwrap_or("6.283185307179586"))?;
                DiscreteGeodesicSpace::circle(grid, n, size)
            }
            "interval" => {
                let grid = self.build_grid()?;
                let n = spec.n.ok_or_else(|| Error::Config("interval needs n".into()))?;
                let size = compile_time_expr(spec.size.as_deref().unwrap_or("1"))?;
                DiscreteGeodesicSpace::interval(grid, n, size)
            }
            "file" => {
                let file = spec.file.as_ref().ok_or_else(|| Error::Config("file builder needs file".into()))?;
                let path = base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
                parse_space_file(&text)
            }
            other => Err(Error::Config(format!("unknown space builder '{}'", other))),
        }
    }

    pub fn build_tdmm(&self, base_dir: &Path) -> Result<TdMmSpace<Real>, Error> {
        let space = self.build_space(base_dir)?;
        let n = space.vertex_count();
        let steps = space.grid().len();
        let f = match &self.weights {
            None => vec![vec![0.0; n]; steps],
            Some(w) => {
                if let Some(table) = &w.table {
                    table.clone()
                } else if let Some(expr_src) = &w.expr {
                    let e = Expr::parse(expr_src)?;
                    let times = space.grid().times().to_vec();
                    let coords = space.coords().to_vec();
                    let mut rows = Vec::with_capacity(steps);
                    for &t in &times {
                        let mut row = Vec::with_capacity(n);
                        for x in 0..n {
                            let coord = coords.get(x).and_then(|c| c.first()).copied().unwrap_or(0.0);
                            row.push(e.eval(&[("t", t), ("x", coord)])?);
                        }
                        rows.push(row);
                    }
                    rows
                } else {
                    return Err(Error::Config("weights need expr or table".into()));
                }
            }
        };
        TdMmSpace::new(space, default_reference(n), f)
    }

    pub fn build_measure(
        &self,
        name: &str,
        space: &DiscreteGeodesicSpace<Real>,
        t_idx: usize,
    ) -> Result<ProbabilityVector<Real>, Error> {
        let spec = self
            .measures
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown measure '{}'", name)))?;
        let n = space.vertex_count();
        match spec.kind.as_str() {
            "dirac" => {
                let at = spec.at.ok_or_else(|| Error::Config("dirac needs at".into()))?;
                if at >= n {
                    return Err(Error::Config(format!("measure '{}' vertex out of range", name)));
                }
                Ok(ProbabilityVector::dirac(n, at))
            }
            "uniform" => Ok(ProbabilityVector::uniform(n)),
            "bump" => {
                let center = spec.center.ok_or_else(|| Error::Config("bump needs center".into()))?;
                let width = spec.width.unwrap_or(1.0);
                Ok(ProbabilityVector::bump(space, t_idx, center, width))
            }
            "table" => {
                let w = spec
                    .weights
                    .clone()
                    .ok_or_else(|| Error::Config("table measure needs weights".into()))?;
                ProbabilityVector::normalized(w)
            }
            other => Err(Error::Config(format!("unknown measure kind '{}'", other))),
        }
    }
}

pub fn default_reference(n: usize) -> ProbabilityVector<Real> {
    ProbabilityVector::uniform(n)
}

/// Compiles an expression of the single variable `t`.
pub fn compile_time_expr(src: &str) -> Result<impl Fn(Real) -> Real + Clone, Error> {
    let e = Expr::parse(src)?;
    // probe so that bad variables fail at load time
    e.eval(&[("t", 0.0)])?;
    Ok(move |t: Real| e.eval(&[("t", t)]).unwrap_or(Real::NAN))
}

/// Compiles an expression of chart coordinates and time.
pub fn compile_chart_expr(src: &str) -> Result<impl Fn(Real, &[Real]) -> Real + Clone, Error> {
    let e = Expr::parse(src)?;
    for v in e.variables() {
        if !matches!(v.as_str(), "x" | "y" | "z" | "t") {
            return Err(Error::Config(format!("unknown chart variable '{}'", v)));
        }
    }
    Ok(move |t: Real, p: &[Real]| {
        let mut vars: Vec<(&str, Real)> = vec![("t", t)];
        let names = ["x", "y", "z"];
        for (i, &c) in p.iter().enumerate().take(3) {
            vars.push((names[i], c));
        }
        e.eval(&vars).unwrap_or(Real::NAN)
    })
}
