//! Experiment configuration: a TOML document with one table per concern.
//!
//! Every table and key is optional; see the README for the full grammar. The resolved
//! config (defaults filled in, seed applied) is echoed into every report.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::fields::RadialField;
use crate::funcspace::{
    beta_family, maximizer_eta, prop1_function, Constant, Coordinate, EllipsoidRatio, Eta, Exponents, Polynomial,
    RadialPower, SharedField,
};
use crate::geometry::{pad_axes, StarDomain, StarProfile};
use crate::hardy::Mode;
use crate::probes::{default_ladder, MaximizerKind};
use crate::quadrature::Resolution;
use crate::suite::SuiteConfig;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Ball {
        n: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `{x : sum a_i^2 x_i^2 < 1}`; `axes` is padded with its last entry up to `n`.
    Ellipsoid {
        axes: Vec<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    /// Profile `r(w) = constant + linear . w + w^T quadratic w`.
    Star {
        n: usize,
        #[serde(default = "one")]
        constant: f64,
        #[serde(default)]
        linear: Vec<f64>,
        #[serde(default)]
        quadratic: Vec<Vec<f64>>,
    },
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Ball { n: 3, radius: 1.0 }
    }
}

impl DomainConfig {
    pub fn dim(&self) -> usize {
        match self {
            DomainConfig::Ball { n, .. } | DomainConfig::Star { n, .. } => *n,
            DomainConfig::Ellipsoid { axes, n } => n.unwrap_or(axes.len()),
        }
    }

    /// Axis parameters when the domain is an ellipsoid (a ball of radius `R` counts,
    /// with every parameter `1/R`).
    pub fn axes(&self) -> Result<Option<Vec<f64>>> {
        match self {
            DomainConfig::Ball { n, radius } => Ok(Some(vec![1.0 / radius; *n])),
            DomainConfig::Ellipsoid { axes, .. } => pad_axes(axes, self.dim()).map(Some),
            DomainConfig::Star { .. } => Ok(None),
        }
    }

    pub fn build(&self, seed: u64) -> Result<StarDomain> {
        match self {
            DomainConfig::Ball { n, radius } => StarDomain::ball(*n, *radius),
            DomainConfig::Ellipsoid { axes, .. } => StarDomain::ellipsoid(&pad_axes(axes, self.dim())?),
            DomainConfig::Star {
                n,
                constant,
                linear,
                quadratic,
            } => StarDomain::star(
                *n,
                StarProfile::Polynomial {
                    constant: *constant,
                    linear: linear.clone(),
                    quadratic: quadratic.clone(),
                },
                None,
                seed,
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    #[default]
    Canonical,
    /// `x/|x|_a`; requires a ball or ellipsoid domain.
    Ellipsoid,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    /// An entry of the built-in catalog, by key.
    Catalog { name: String },
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    RadialPower {
        beta: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `x_index`, one-based.
    Coordinate { index: usize },
    #[serde(alias = "custom-polynomial", alias = "custom_polynomial")]
    Polynomial { terms: Vec<Monomial> },
    /// `gamma(x) |x - x0|^-alpha`; `x0` defaults to the last basis vector.
    Prop1 {
        alpha: f64,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    /// Subcritical maximizer: the beta family at `beta = (n-p)/p`.
    Xi {
        #[serde(default = "one_usize")]
        psi_index: usize,
    },
    /// Critical maximizer.
    Eta { alpha: f64 },
    /// `|x|^beta psi + |f(x)|^beta psi` with `psi = x_i/|x|_a` (`|x|` off ellipsoids).
    BetaFamily {
        beta: f64,
        #[serde(default = "one_usize")]
        psi_index: usize,
    },
}

fn one_usize() -> usize {
    1
}

impl Default for FunctionConfig {
    fn default() -> Self {
        FunctionConfig::Catalog { name: "abs".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentConfig {
    /// Ignored when `critical` is set (`p = n` then).
    pub p: f64,
    pub critical: bool,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            p: 2.0,
            critical: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Check the classical inequality (`u` vanishing on the boundary) instead.
    pub classical: bool,
    /// Allowed excess of `Q` over 1; defaults to 1e-6 (subcritical) / 1e-4 (critical).
    pub tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MaximizerChoice {
    #[default]
    Xi,
    Eta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizerConfig {
    pub kind: MaximizerChoice,
    /// Exponent of the angular factor of eta, `alpha >= n/2`.
    pub alpha: f64,
    /// Allowed `|Q - 1|`; defaults to 1e-6 for xi and 1e-4 for eta.
    pub tolerance: Option<f64>,
    /// Allowed relative gap between the volume and sphere forms of the common value.
    pub gap_tolerance: f64,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        MaximizerConfig {
            kind: MaximizerChoice::Xi,
            alpha: 2.0,
            tolerance: None,
            gap_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessConfig {
    /// Explicit beta values; when empty, `points` values on `[kappa, max_factor*kappa]`.
    pub betas: Vec<f64>,
    pub points: usize,
    pub max_factor: f64,
    pub psi_index: usize,
    pub tolerance: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            betas: Vec::new(),
            points: 9,
            max_factor: 3.0,
            psi_index: 1,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub alpha: f64,
    /// Unit vector; defaults to the last basis vector.
    pub x0: Option<Vec<f64>>,
    /// Decreasing cap radii in (0, 1); defaults to `2^-3, ..., 2^-10`.
    pub ladder: Vec<f64>,
    /// Relative tolerance on fitted power-law exponents.
    pub tolerance: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            alpha: 1.25,
            x0: None,
            ladder: default_ladder(),
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldCheckConfig {
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for FieldCheckConfig {
    fn default() -> Self {
        FieldCheckConfig {
            samples: 1000,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write CSV tables where a command has them.
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("."),
            csv: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub domain: DomainConfig,
    pub field: FieldConfig,
    pub function: FunctionConfig,
    pub exponents: ExponentConfig,
    /// Quadrature resolution; `None` picks a dimension-dependent default on resolve.
    pub rule: Option<Resolution>,
    pub verify: VerifyConfig,
    pub maximizer: MaximizerConfig,
    pub sharpness: SharpnessConfig,
    pub counterexample: CounterexampleConfig,
    pub field_check: FieldCheckConfig,
    pub suite: SuiteConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies overrides, fills in the default rule and validates. The result is what
    /// reports echo.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(dir) = out {
            self.output.dir = dir;
        }
        let mut rule = self
            .rule
            .take()
            .unwrap_or_else(|| Resolution::for_dim(self.domain.dim()));
        rule.seed = self.seed;
        self.rule = Some(rule);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.domain.dim();
        if n < 2 {
            return Err(Error::Config(format!("domain dimension must be at least 2, got {n}")));
        }
        if let DomainConfig::Ellipsoid { axes, n: Some(m) } = &self.domain {
            if axes.len() > *m {
                return Err(Error::Config(format!("{} axes given for dimension {m}", axes.len())));
            }
        }
        if self.field.kind == FieldKind::Ellipsoid && matches!(self.domain, DomainConfig::Star { .. }) {
            return Err(Error::Config(
                "the ellipsoid field needs a ball or ellipsoid domain".into(),
            ));
        }
        let p = self.exponents.p;
        if !self.exponents.critical && !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("exponent p must be finite and >= 1, got {p}")));
        }
        self.validate_function(n)?;
        if let Some(r) = &self.rule {
            r.validate().map_err(|e| Error::Config(format!("rule: {e}")))?;
        }
        if self.sharpness.betas.is_empty() && (self.sharpness.points == 0 || !(self.sharpness.max_factor >= 1.0)) {
            return Err(Error::Config("sharpness: need points >= 1 and max_factor >= 1".into()));
        }
        if let Some(x0) = &self.counterexample.x0 {
            if x0.len() != n {
                return Err(Error::Config(format!(
                    "counterexample.x0 has {} entries, domain has n = {n}",
                    x0.len()
                )));
            }
        }
        if self.field_check.samples == 0 {
            return Err(Error::Config("field_check.samples must be positive".into()));
        }
        self.suite.validate()
    }

    fn validate_function(&self, n: usize) -> Result<()> {
        let index_ok = |i: usize, what: &str| {
            if i == 0 || i > n {
                Err(Error::Config(format!("function.{what} = {i} is outside 1..={n}")))
            } else {
                Ok(())
            }
        };
        match &self.function {
            FunctionConfig::Catalog { name } => {
                if name != "constant" && !catalog::NAMES.contains(&name.as_str()) {
                    return Err(Error::Config(format!(
                        "unknown catalog function {name:?}; known: {}",
                        catalog::NAMES.join(", ")
                    )));
                }
            }
            FunctionConfig::Coordinate { index } => index_ok(*index, "index")?,
            FunctionConfig::Xi { psi_index } | FunctionConfig::BetaFamily { psi_index, .. } => {
                index_ok(*psi_index, "psi_index")?
            }
            FunctionConfig::Polynomial { terms } => {
                if let Some(t) = terms.iter().find(|t| t.powers.len() > n) {
                    return Err(Error::Config(format!(
                        "monomial powers {:?} exceed dimension {n}",
                        t.powers
                    )));
                }
            }
            FunctionConfig::Prop1 { x0: Some(x0), .. } if x0.len() != n => {
                return Err(Error::Config(format!(
                    "function.x0 has {} entries, domain has n = {n}",
                    x0.len()
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> Resolution {
        let mut r = self.rule.clone().unwrap_or_else(|| Resolution::for_dim(self.dim()));
        r.seed = self.seed;
        r
    }

    pub fn build_domain(&self) -> Result<Arc<StarDomain>> {
        Ok(Arc::new(self.domain.build(self.seed)?))
    }

    pub fn build_field(&self, d: &Arc<StarDomain>) -> Result<RadialField> {
        match self.field.kind {
            FieldKind::Canonical => Ok(RadialField::canonical(d.clone())),
            FieldKind::Ellipsoid => {
                let axes = self
                    .domain
                    .axes()?
                    .ok_or_else(|| Error::Config("the ellipsoid field needs a ball or ellipsoid domain".into()))?;
                RadialField::ellipsoid(&axes)
            }
        }
    }

    pub fn exponents(&self) -> Result<Exponents> {
        if self.exponents.critical {
            Exponents::critical(self.dim())
        } else {
            Exponents::subcritical(self.dim(), self.exponents.p)
        }
    }

    pub fn mode(&self) -> Mode {
        match (self.verify.classical, self.exponents.critical) {
            (false, false) => Mode::Subcritical,
            (false, true) => Mode::Critical,
            (true, false) => Mode::ClassicalSubcritical,
            (true, true) => Mode::ClassicalCritical,
        }
    }

    /// `p` as used by the inequality: `n` in the critical case.
    pub fn p(&self) -> f64 {
        if self.exponents.critical {
            self.dim() as f64
        } else {
            self.exponents.p
        }
    }

    /// `x_i/|x|_a` on balls and ellipsoids, `x_i/|x|` otherwise.
    pub fn psi(&self, index: usize) -> Result<SharedField> {
        let n = self.dim();
        let axes = self.domain.axes()?.unwrap_or_else(|| vec![1.0; n]);
        Ok(Arc::new(EllipsoidRatio { axes, index: index - 1 }))
    }

    pub fn build_function(&self, d: &Arc<StarDomain>) -> Result<SharedField> {
        let n = self.dim();
        Ok(match &self.function {
            FunctionConfig::Catalog { name } => catalog::by_name(name, n)?,
            FunctionConfig::Constant { value } => Arc::new(Constant(*value)),
            FunctionConfig::RadialPower { beta, scale } => Arc::new(RadialPower {
                beta: *beta,
                scale: *scale,
            }),
            FunctionConfig::Coordinate { index } => Arc::new(Coordinate(index - 1)),
            FunctionConfig::Polynomial { terms } => Arc::new(Polynomial {
                terms: terms
                    .iter()
                    .map(|t| {
                        let mut e = t.powers.clone();
                        e.resize(n, 0);
                        (t.coeff, e)
                    })
                    .collect(),
            }),
            FunctionConfig::Prop1 { alpha, x0 } => {
                let x0 = x0.clone().unwrap_or_else(|| last_basis_vector(n));
                Arc::new(prop1_function(*alpha, &x0)?)
            }
            FunctionConfig::Xi { psi_index } => {
                let e = Exponents::subcritical(n, self.exponents.p)?;
                Arc::new(beta_family(d.clone(), self.psi(*psi_index)?, e.kappa(), e.p, n)?)
            }
            FunctionConfig::BetaFamily { beta, psi_index } => Arc::new(beta_family(
                d.clone(),
                self.psi(*psi_index)?,
                *beta,
                self.exponents.p,
                n,
            )?),
            FunctionConfig::Eta { alpha } => match &self.domain {
                DomainConfig::Star { .. } => Arc::new(Eta::on_domain(d.clone(), *alpha)?),
                _ => Arc::new(maximizer_eta(&self.domain.axes()?.unwrap_or_default(), n, *alpha)?),
            },
        })
    }

    /// The maximizer selected by `[maximizer]` on the configured ellipsoid or ball.
    pub fn maximizer_kind(&self, choice: MaximizerChoice) -> Result<MaximizerKind> {
        let n = self.dim();
        let axes = self
            .domain
            .axes()?
            .ok_or_else(|| Error::Config("maximizer checks need a ball or ellipsoid domain".into()))?;
        Ok(match choice {
            MaximizerChoice::Xi => MaximizerKind::Xi {
                axes,
                n,
                p: self.exponents.p,
            },
            MaximizerChoice::Eta => MaximizerKind::Eta {
                axes,
                n,
                alpha: self.maximizer.alpha,
            },
        })
    }

    pub fn counterexample_x0(&self) -> Vec<f64> {
        self.counterexample
            .x0
            .clone()
            .unwrap_or_else(|| last_basis_vector(self.dim()))
    }
}

fn last_basis_vector(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        let c = c.resolve(Some(9), None).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.rule.as_ref().unwrap().seed, 9);
        assert_eq!(c.dim(), 3);
    }

    #[test]
    fn parses_all_blocks() {
        let c = ExperimentConfig::from_toml(
            r#"
            seed = 4
            [domain]
            kind = "ellipsoid"
            axes = [1.0, 2.0]
            n = 4
            [field]
            kind = "ellipsoid"
            [function]
            kind = "custom-polynomial"
            terms = [{ coeff = 2.0, powers = [1, 1] }]
            [exponents]
            p = 1.5
            [rule]
            angular_count = 6
            radial_levels = 10
            [sharpness]
            points = 5
            [suite]
            dims = [3]
            critical_dims = []
            domains = ["ball"]
            "#,
        )
        .unwrap()
        .resolve(None, Some("out".into()))
        .unwrap();
        assert_eq!(c.dim(), 4);
        assert_eq!(c.domain.axes().unwrap().unwrap(), vec![1.0, 2.0, 2.0, 2.0]);
        assert_eq!(c.rule.as_ref().unwrap().angular_order, 6);
        assert_eq!(c.output.dir, PathBuf::from("out"));
        let d = c.build_domain().unwrap();
        let u = c.build_function(&d).unwrap();
        assert_eq!(u.value(&[1.0, 3.0, 0.0, 0.0]), 6.0);
        // round trip through the echo
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_inconsistent_blocks() {
        let bad = [
            "[domain]\nkind = \"torus\"",
            "[domain]\nkind = \"ball\"\nn = 3\nwidth = 2",
            "[function]\nkind = \"catalog\"\nname = \"nope\"",
            "[function]\nkind = \"coordinate\"\nindex = 4",
            "[domain]\nkind = \"star\"\nn = 3\nlinear = [0.3]\n[field]\nkind = \"ellipsoid\"",
            "[exponents]\np = 0.5",
            "[counterexample]\nx0 = [1.0, 0.0]",
            "[rule]\npanel_order = 0",
            "bogus = 1",
        ];
        for text in bad {
            let r = ExperimentConfig::from_toml(text).and_then(|c| c.resolve(None, None));
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        }
    }

    #[test]
    fn builds_maximizers_from_blocks() {
        let c = ExperimentConfig::from_toml("[function]\nkind = \"xi\"")
            .unwrap()
            .resolve(None, None)
            .unwrap();
        let d = c.build_domain().unwrap();
        let u = c.build_function(&d).unwrap();
        // u - u o f = |x|^kappa psi with kappa = 1/2 and psi = x1/|x| on the unit ball
        let x = [0.25, 0.0, 0.0];
        assert!((u.value(&x) - u.boundary_value(&[1.0, 0.0, 0.0]) - 0.5).abs() < 1e-14);
        let c = ExperimentConfig::from_toml("[function]\nkind = \"eta\"\nalpha = 2").unwrap();
        assert!(matches!(c.build_function(&d), Err(Error::NoMaximizer(_))));
    }
}
