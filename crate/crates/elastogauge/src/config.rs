//! TOML experiment configuration: schema, defaults, and validation into a
//! fully built `ExperimentSpec`. Unknown keys are rejected with the key path
//! in the error.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::domain::{Domain, Point};
use crate::dn::{constant_gauge_factor, interior_gauge_factor, GaugeSpec};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{
    bump_displacement, holomorphic_sample, linear_conformal, DiffeoMap, GaugeFactor,
};
use crate::material::{
    metric_conformal_exp, metric_conformal_sine, metric_diagonal_poly, metric_euclidean,
    metric_radial, metric_sheared, scalar_affine, scalar_constant, scalar_exp,
    scalar_one_plus_bump, scalar_sine, stiffness_constant_voigt, stiffness_isotropic,
    stiffness_isotropic_gradient, stiffness_isotropic_sine, stiffness_rotated_orthotropic,
    MaterialTriple,
};
use crate::solver::grid::{Face, Grid};
use crate::solver::time::BoundarySignal;
use crate::tensor::{MetricField, StiffnessField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    CheckOperators,
    RunDn,
    CompareGauge,
    ScalingCheck,
    QpSpeed,
    Convergence,
    Table1Preset,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "check-operators" => ExperimentKind::CheckOperators,
            "run-dn" => ExperimentKind::RunDn,
            "compare-gauge" => ExperimentKind::CompareGauge,
            "scaling-check" => ExperimentKind::ScalingCheck,
            "qp-speed" => ExperimentKind::QpSpeed,
            "convergence" => ExperimentKind::Convergence,
            "table1-preset" => ExperimentKind::Table1Preset,
            _ => return Err(Error::config("kind", format!("unknown experiment kind `{s}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::CheckOperators => "check-operators",
            ExperimentKind::RunDn => "run-dn",
            ExperimentKind::CompareGauge => "compare-gauge",
            ExperimentKind::ScalingCheck => "scaling-check",
            ExperimentKind::QpSpeed => "qp-speed",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Table1Preset => "table1-preset",
        }
    }
}

// ---------------------------------------------------------------------------
// raw TOML schema
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<String>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub domain: Option<DomainSection>,
    pub time: Option<TimeSection>,
    pub source: Option<SourceSection>,
    pub material: Option<MaterialSection>,
    pub metric: Option<MetricSection>,
    pub density: Option<DensitySection>,
    pub gauge: Option<GaugeSection>,
    pub grids: Option<GridsSection>,
    pub probes: Option<ProbeSection>,
    pub perturbation: Option<PerturbationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub nx: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t: f64,
    pub cfl_factor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub family: Option<String>,
    pub face: Option<String>,
    pub center: Option<f64>,
    pub width: Option<f64>,
    pub frequency: Option<f64>,
    pub amplitude: Option<f64>,
    pub burst: Option<f64>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub family: String,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub grad_lambda: Option<Vec<f64>>,
    pub grad_mu: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub k: Option<f64>,
    pub c11: Option<f64>,
    pub c22: Option<f64>,
    pub c12: Option<f64>,
    pub c66: Option<f64>,
    pub theta0: Option<f64>,
    pub theta_grad: Option<Vec<f64>>,
    pub voigt: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub family: String,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub dir: Option<Vec<f64>>,
    pub k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub family: String,
    pub value: Option<f64>,
    pub grad: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub k: Option<f64>,
    pub gamma: Option<f64>,
    pub dir: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    pub theorem_mode: Option<bool>,
    pub mu: Option<GaugeMuSection>,
    pub diffeo: Option<DiffeoSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeMuSection {
    pub family: String,
    pub value: Option<f64>,
    pub amplitude: Option<f64>,
    pub collar: Option<f64>,
    pub gamma: Option<f64>,
    pub dir: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoSection {
    pub family: String,
    pub amplitude: Option<f64>,
    pub direction: Option<Vec<f64>>,
    pub collar: Option<f64>,
    pub scale: Option<f64>,
    pub angle: Option<f64>,
    pub axis: Option<usize>,
    pub shift: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    pub nx: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

// ---------------------------------------------------------------------------
// validated spec
// ---------------------------------------------------------------------------

pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub preset: Option<String>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub domain: Domain,
    pub grids: Vec<Grid>,
    pub t_final: f64,
    pub cfl_factor: f64,
    pub triple: MaterialTriple,
    pub signal: BoundarySignal,
    pub gauge: Option<GaugeSpec>,
    pub theorem_mode: bool,
    pub perturbation: Option<(f64, Point, f64)>,
    pub probe_count: usize,
    pub triple_report: crate::material::TripleReport,
    pub config_text: String,
}

fn to_point(v: &Option<Vec<f64>>, n: usize, default: Point, key: &str) -> Result<Point> {
    match v {
        None => Ok(default),
        Some(vals) => {
            if vals.len() != n {
                return Err(Error::config(key, format!("needs {n} components")));
            }
            let mut p = [0.0; 3];
            p[..n].copy_from_slice(vals);
            Ok(p)
        }
    }
}

fn build_density(sec: &Option<DensitySection>, n: usize) -> Result<ScalarField> {
    let sec = match sec {
        None => return Ok(scalar_constant(n, 1.0)),
        Some(s) => s,
    };
    match sec.family.as_str() {
        "constant" => Ok(scalar_constant(n, sec.value.unwrap_or(1.0))),
        "affine" => Ok(scalar_affine(
            n,
            sec.value.unwrap_or(1.0),
            to_point(&sec.grad, n, [0.0; 3], "density.grad")?,
        )),
        "sine" => Ok(scalar_sine(
            n,
            sec.value.unwrap_or(1.0),
            sec.amplitude.unwrap_or(0.2),
            sec.k.unwrap_or(1.0),
        )),
        "exp" => Ok(scalar_exp(
            n,
            sec.gamma.unwrap_or(0.3),
            to_point(&sec.dir, n, unit_x(n), "density.dir")?,
        )),
        f => Err(Error::config("density.family", format!("unknown family `{f}`"))),
    }
}

fn unit_x(n: usize) -> Point {
    let mut p = [0.0; 3];
    let _ = n;
    p[0] = 1.0;
    p
}

fn build_metric(sec: &Option<MetricSection>, n: usize) -> Result<MetricField> {
    let sec = match sec {
        None => return Ok(metric_euclidean(n)),
        Some(s) => s,
    };
    match sec.family.as_str() {
        "euclidean" => Ok(metric_euclidean(n)),
        "conformal_exp" => Ok(metric_conformal_exp(
            n,
            sec.alpha.unwrap_or(0.3),
            to_point(&sec.dir, n, unit_x(n), "metric.dir")?,
        )),
        "conformal_sine" => Ok(metric_conformal_sine(
            n,
            sec.alpha.unwrap_or(0.3),
            sec.k.unwrap_or(1.0),
        )),
        "diagonal_poly" => Ok(metric_diagonal_poly(
            n,
            to_point(&sec.alphas, n, [0.5, 0.3, 0.2], "metric.alphas")?,
        )),
        "sheared" => Ok(metric_sheared(n, sec.alpha.unwrap_or(0.4))),
        "radial" => Ok(metric_radial(n, sec.alpha.unwrap_or(0.4))),
        f => Err(Error::config("metric.family", format!("unknown family `{f}`"))),
    }
}

fn build_stiffness(sec: &Option<MaterialSection>, n: usize) -> Result<StiffnessField> {
    let sec = match sec {
        None => return stiffness_isotropic(n, 2.0, 1.0),
        Some(s) => s,
    };
    match sec.family.as_str() {
        "isotropic" => stiffness_isotropic(n, sec.lambda.unwrap_or(2.0), sec.mu.unwrap_or(1.0)),
        "isotropic_gradient" => Ok(stiffness_isotropic_gradient(
            n,
            sec.lambda.unwrap_or(2.0),
            sec.mu.unwrap_or(1.0),
            to_point(&sec.grad_lambda, n, [0.0; 3], "material.grad_lambda")?,
            to_point(&sec.grad_mu, n, [0.0; 3], "material.grad_mu")?,
        )),
        "isotropic_sine" => Ok(stiffness_isotropic_sine(
            n,
            sec.lambda.unwrap_or(2.0),
            sec.mu.unwrap_or(1.0),
            sec.amplitude.unwrap_or(0.2),
            sec.k.unwrap_or(1.0),
        )),
        "rotated_orthotropic" => {
            if n != 2 {
                return Err(Error::config(
                    "material.family",
                    "rotated_orthotropic is 2-D only",
                ));
            }
            stiffness_rotated_orthotropic(
                sec.c11.unwrap_or(4.0),
                sec.c22.unwrap_or(3.0),
                sec.c12.unwrap_or(1.2),
                sec.c66.unwrap_or(0.9),
                sec.theta0.unwrap_or(0.0),
                to_point(&sec.theta_grad, n, [0.0; 3], "material.theta_grad")?,
            )
        }
        "voigt" => {
            let rows = sec
                .voigt
                .as_ref()
                .ok_or_else(|| Error::config("material.voigt", "missing Voigt rows"))?;
            let m = n * (n + 1) / 2;
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(Error::config(
                    "material.voigt",
                    format!("need a {m} x {m} matrix"),
                ));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            stiffness_constant_voigt(n, &flat)
        }
        f => Err(Error::config("material.family", format!("unknown family `{f}`"))),
    }
}

fn build_gauge_mu(sec: &Option<GaugeMuSection>, domain: &Domain) -> Result<GaugeFactor> {
    let n = domain.dim();
    let sec = match sec {
        None => return Ok(GaugeFactor::new(ScalarField::constant(n, 1.0), true)),
        Some(s) => s,
    };
    match sec.family.as_str() {
        "one" => Ok(GaugeFactor::new(ScalarField::constant(n, 1.0), true)),
        "constant" => Ok(constant_gauge_factor(n, sec.value.unwrap_or(4.0))),
        "interior_bump" => Ok(interior_gauge_factor(
            domain,
            sec.amplitude.unwrap_or(0.3),
            sec.collar.unwrap_or(0.125),
        )),
        "exp" => Ok(GaugeFactor::new(
            scalar_exp(
                n,
                sec.gamma.unwrap_or(0.4),
                to_point(&sec.dir, n, unit_x(n), "gauge.mu.dir")?,
            ),
            false,
        )),
        "one_plus_bump" => Ok(GaugeFactor::new(
            scalar_one_plus_bump(domain, sec.amplitude.unwrap_or(0.3), sec.collar.unwrap_or(0.125)),
            true,
        )),
        f => Err(Error::config("gauge.mu.family", format!("unknown family `{f}`"))),
    }
}

fn build_diffeo(sec: &Option<DiffeoSection>, domain: &Domain) -> Result<DiffeoMap> {
    let n = domain.dim();
    let sec = match sec {
        None => return Ok(DiffeoMap::identity(*domain)),
        Some(s) => s,
    };
    match sec.family.as_str() {
        "identity" => Ok(DiffeoMap::identity(*domain)),
        "bump_displacement" => bump_displacement(
            *domain,
            sec.amplitude.unwrap_or(0.03),
            to_point(&sec.direction, n, unit_x(n), "gauge.diffeo.direction")?,
            sec.collar.unwrap_or(0.125),
        ),
        "linear_conformal" => linear_conformal(
            *domain,
            sec.scale.unwrap_or(1.0),
            sec.angle.unwrap_or(0.0),
            sec.axis.unwrap_or(2),
            to_point(&sec.shift, n, [0.0; 3], "gauge.diffeo.shift")?,
        ),
        "holomorphic_sample" => holomorphic_sample(*domain, sec.amplitude.unwrap_or(0.15)),
        f => Err(Error::config(
            "gauge.diffeo.family",
            format!("unknown family `{f}`"),
        )),
    }
}

/// Parses and validates a config file into a runnable spec. Every referenced
/// builtin family must exist, the refinement sequence must be strictly
/// decreasing in h, and the material triple must pass probe validation.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_config_str(&text, path)
}

pub fn parse_config_str(text: &str, path: &Path) -> Result<ExperimentSpec> {
    let raw: ConfigFile = toml::from_str(text)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;

    let kind = match &raw.kind {
        Some(k) => ExperimentKind::parse(k)?,
        None => {
            return Err(Error::config(
                "kind",
                "missing experiment kind (or pass it as the CLI subcommand)",
            ))
        }
    };
    build_spec(raw, kind, text)
}

/// Same as `parse_config` but lets the CLI subcommand supply or confirm the
/// kind, and the command line override the seed.
pub fn parse_config_with_kind(
    path: &Path,
    kind: ExperimentKind,
    seed_override: Option<u64>,
) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    let mut raw: ConfigFile = toml::from_str(&text)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    if let Some(k) = &raw.kind {
        let declared = ExperimentKind::parse(k)?;
        if declared != kind {
            return Err(Error::config(
                "kind",
                format!(
                    "config declares `{}` but the subcommand is `{}`",
                    declared.name(),
                    kind.name()
                ),
            ));
        }
    }
    if let Some(s) = seed_override {
        raw.seed = Some(s);
    }
    build_spec(raw, kind, &text)
}

fn build_spec(raw: ConfigFile, kind: ExperimentKind, text: &str) -> Result<ExperimentSpec> {
    let (lengths, nx_domain) = match &raw.domain {
        Some(d) => (d.l.clone(), d.nx.clone()),
        None => (vec![1.0, 1.0], None),
    };
    let n = lengths.len();
    let domain = Domain::new(n, &lengths)?;

    // grid sequence: explicit [grids].nx, else the domain nx, else a default
    let nx_list: Vec<Vec<usize>> = if let Some(g) = &raw.grids {
        if g.nx.is_empty() {
            return Err(Error::config("grids.nx", "empty refinement sequence"));
        }
        if g.nx.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "grids.nx",
                "refinement sequence must be strictly increasing in nx (decreasing in h)",
            ));
        }
        g.nx.iter().map(|&m| scale_nx(&lengths, m)).collect()
    } else if let Some(nx) = &nx_domain {
        vec![nx.clone()]
    } else {
        vec![scale_nx(&lengths, 65)]
    };
    let mut grids = Vec::new();
    for nx in &nx_list {
        grids.push(Grid::new(domain, nx)?);
    }

    let t_final = raw.time.as_ref().map(|t| t.t).unwrap_or(1.0);
    if !(t_final > 0.0) {
        return Err(Error::config("time.T", "final time must be positive"));
    }
    let cfl_factor = raw
        .time
        .as_ref()
        .and_then(|t| t.cfl_factor)
        .unwrap_or(0.5);
    if !(cfl_factor > 0.0 && cfl_factor <= 1.0) {
        return Err(Error::config("time.cfl_factor", "must lie in (0, 1]"));
    }

    let rho = build_density(&raw.density, n)?;
    let c = build_stiffness(&raw.material, n)?;
    let g = build_metric(&raw.metric, n)?;
    let triple = MaterialTriple::new(rho, c, g);

    let probe_count = raw.probes.as_ref().and_then(|p| p.count).unwrap_or(128);
    let seed = raw.seed.unwrap_or(0);
    let triple_report = triple.validate(&domain, probe_count, seed)?;

    let signal = build_signal(&raw.source, &domain, t_final)?;

    let theorem_mode = raw
        .gauge
        .as_ref()
        .and_then(|g| g.theorem_mode)
        .unwrap_or(matches!(kind, ExperimentKind::CompareGauge));
    let gauge = match &raw.gauge {
        None => None,
        Some(gs) => {
            let mu = build_gauge_mu(&gs.mu, &domain)?;
            let phi = build_diffeo(&gs.diffeo, &domain)?;
            Some(GaugeSpec { phi, mu })
        }
    };
    if let Some(spec) = &gauge {
        spec.validate(theorem_mode, seed)?;
    }

    let perturbation = match &raw.perturbation {
        None => None,
        Some(p) => {
            let c = to_point(&Some(p.center.clone()), n, [0.5; 3], "perturbation.center")?;
            if !(p.radius > 0.0) {
                return Err(Error::config("perturbation.radius", "must be positive"));
            }
            Some((p.amplitude, c, p.radius))
        }
    };

    if kind == ExperimentKind::Table1Preset {
        let p = raw
            .preset
            .as_deref()
            .ok_or_else(|| Error::config("preset", "table1-preset needs a preset name"))?;
        let known = [
            "table1.principal-euclidean",
            "table1.principal-riemannian",
            "table1.full-euclidean",
            "table1.full-riemannian",
        ];
        if !known.contains(&p) {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{p}`; known: {known:?}"),
            ));
        }
    }

    let output_dir = PathBuf::from(raw.output_dir.clone().unwrap_or_else(|| "out".into()));

    Ok(ExperimentSpec {
        kind,
        preset: raw.preset,
        seed,
        output_dir,
        domain,
        grids,
        t_final,
        cfl_factor,
        triple,
        signal,
        gauge,
        theorem_mode,
        perturbation,
        probe_count,
        triple_report,
        config_text: text.to_string(),
    })
}

/// Node counts per axis for roughly `base` nodes along the first axis,
/// keeping h uniform across axes.
fn scale_nx(lengths: &[f64], base: usize) -> Vec<usize> {
    let h = lengths[0] / (base - 1) as f64;
    lengths
        .iter()
        .map(|&l| ((l / h).round() as usize) + 1)
        .collect()
}

fn build_signal(
    sec: &Option<SourceSection>,
    domain: &Domain,
    t_final: f64,
) -> Result<BoundarySignal> {
    let n = domain.dim();
    let defaults = SourceSection {
        family: None,
        face: None,
        center: None,
        width: None,
        frequency: None,
        amplitude: None,
        burst: None,
        direction: None,
    };
    let sec = sec.as_ref().unwrap_or(&defaults);
    match sec.family.as_deref().unwrap_or("burst") {
        "zero" => Ok(BoundarySignal::zero(n)),
        "burst" => {
            let face = Face::from_name(sec.face.as_deref().unwrap_or("x_min"))?;
            if face.axis() >= n {
                return Err(Error::config("source.face", "face outside the dimension"));
            }
            let mut dir = vec![0.0; n];
            dir[..n].copy_from_slice(
                &to_point(&sec.direction, n, unit_x(n), "source.direction")?[..n],
            );
            BoundarySignal::burst(
                n,
                face,
                dir,
                sec.amplitude.unwrap_or(1.0),
                sec.center.unwrap_or(0.5 * domain.length(1 - face.axis().min(1))),
                sec.width.unwrap_or(0.25 * domain.length(0)),
                sec.frequency.unwrap_or(1.0),
                sec.burst.unwrap_or(0.5 * t_final),
            )
        }
        f => Err(Error::config("source.family", format!("unknown family `{f}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = r#"
kind = "run-dn"
[domain]
L = [1.0, 1.0]
nx = [33, 33]
[time]
T = 0.5
"#;
        let spec = parse_config_str(text, Path::new("test.toml")).unwrap();
        assert_eq!(spec.kind, ExperimentKind::RunDn);
        assert_eq!(spec.cfl_factor, 0.5);
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.grids.len(), 1);
        assert_eq!(spec.probe_count, 128);
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let text = r#"
kind = "run-dn"
[domain]
L = [1.0, 1.0]
nx = [33, 33]
bogus_key = 3
[time]
T = 0.5
"#;
        let err = match parse_config_str(text, Path::new("t.toml")) {
            Err(e) => e,
            Ok(_) => panic!("unknown key must be rejected"),
        };
        let msg = format!("{err}");
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn tiny_grid_rejected() {
        let text = r#"
kind = "run-dn"
[domain]
L = [1.0, 1.0]
nx = [0, 0]
[time]
T = 0.5
"#;
        let err = match parse_config_str(text, Path::new("t.toml")) {
            Err(e) => e,
            Ok(_) => panic!("tiny grid must be rejected"),
        };
        assert!(format!("{err}").contains("domain.nx"));
    }

    #[test]
    fn bad_refinement_sequence_rejected() {
        let text = r#"
kind = "compare-gauge"
[domain]
L = [1.0, 1.0]
[grids]
nx = [65, 65]
[time]
T = 0.5
"#;
        assert!(parse_config_str(text, Path::new("t.toml")).is_err());
    }

    #[test]
    fn preset_name_validated() {
        let good = r#"
kind = "table1-preset"
preset = "table1.full-riemannian"
[domain]
L = [1.0, 1.0]
"#;
        assert!(parse_config_str(good, Path::new("t.toml")).is_ok());
        let bad = good.replace("full-riemannian", "nonexistent");
        assert!(parse_config_str(&bad, Path::new("t.toml")).is_err());
    }

    #[test]
    fn gauge_sections_build() {
        let text = r#"
kind = "compare-gauge"
[domain]
L = [1.0, 1.0]
[grids]
nx = [17, 25]
[time]
T = 0.3
[gauge]
theorem_mode = true
[gauge.mu]
family = "interior_bump"
amplitude = 0.3
collar = 0.125
[gauge.diffeo]
family = "bump_displacement"
amplitude = 0.02
direction = [1.0, 0.5]
collar = 0.125
"#;
        let spec = parse_config_str(text, Path::new("t.toml")).unwrap();
        assert!(spec.gauge.is_some());
        assert!(spec.theorem_mode);
    }
}
