use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::MechanismKind;

/// Tag of a privacy definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Pure,
    Approx,
    Kl,
    Mcdp,
    Zcdp,
    Renyi,
    Gdp,
    Rao,
}

impl BudgetKind {
    pub const ALL: [BudgetKind; 8] = [
        BudgetKind::Pure,
        BudgetKind::Approx,
        BudgetKind::Kl,
        BudgetKind::Mcdp,
        BudgetKind::Zcdp,
        BudgetKind::Renyi,
        BudgetKind::Gdp,
        BudgetKind::Rao,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            BudgetKind::Pure => "pure",
            BudgetKind::Approx => "approx",
            BudgetKind::Kl => "kl",
            BudgetKind::Mcdp => "mcdp",
            BudgetKind::Zcdp => "zcdp",
            BudgetKind::Renyi => "renyi",
            BudgetKind::Gdp => "gdp",
            BudgetKind::Rao => "rao",
        }
    }

    /// Parameter names in serialization order.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            BudgetKind::Pure => &["epsilon"],
            BudgetKind::Approx => &["epsilon", "delta"],
            BudgetKind::Kl => &["alpha"],
            BudgetKind::Mcdp => &["mu", "tau"],
            BudgetKind::Zcdp => &["rho"],
            BudgetKind::Renyi => &["alpha", "epsilon"],
            BudgetKind::Gdp => &["mu"],
            BudgetKind::Rao => &["theta"],
        }
    }
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for BudgetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BudgetKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::MalformedBudget(format!("unknown budget kind {s:?}")))
    }
}

/// A privacy budget under one of the supported definitions.
///
/// zCDP budgets carry ρ only; the additive ξ is fixed at 0. The mCDP row keeps
/// the arithmetic of its composition rule, with `(μ, τ)` understood as the
/// mean and sub-Gaussian scale of the privacy loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget", into = "RawBudget")]
pub enum Budget {
    Pure { epsilon: f64 },
    Approx { epsilon: f64, delta: f64 },
    Kl { alpha: f64 },
    Mcdp { mu: f64, tau: f64 },
    Zcdp { rho: f64 },
    Renyi { alpha: f64, epsilon: f64 },
    Gdp { mu: f64 },
    Rao { theta: f64 },
}

impl Budget {
    pub fn kind(&self) -> BudgetKind {
        match self {
            Budget::Pure { .. } => BudgetKind::Pure,
            Budget::Approx { .. } => BudgetKind::Approx,
            Budget::Kl { .. } => BudgetKind::Kl,
            Budget::Mcdp { .. } => BudgetKind::Mcdp,
            Budget::Zcdp { .. } => BudgetKind::Zcdp,
            Budget::Renyi { .. } => BudgetKind::Renyi,
            Budget::Gdp { .. } => BudgetKind::Gdp,
            Budget::Rao { .. } => BudgetKind::Rao,
        }
    }

    /// Components in the order of [`BudgetKind::param_names`].
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Budget::Pure { epsilon } => vec![epsilon],
            Budget::Approx { epsilon, delta } => vec![epsilon, delta],
            Budget::Kl { alpha } => vec![alpha],
            Budget::Mcdp { mu, tau } => vec![mu, tau],
            Budget::Zcdp { rho } => vec![rho],
            Budget::Renyi { alpha, epsilon } => vec![alpha, epsilon],
            Budget::Gdp { mu } => vec![mu],
            Budget::Rao { theta } => vec![theta],
        }
    }

    /// Builds a budget from its kind and components, with the same checks as
    /// [`Budget::validate`].
    pub fn from_params(kind: BudgetKind, params: &[f64]) -> Result<Self> {
        let names = kind.param_names();
        if params.len() != names.len() {
            return Err(Error::MalformedBudget(format!(
                "{kind} takes {} parameter(s) ({}), got {}",
                names.len(),
                names.join(", "),
                params.len()
            )));
        }
        let p = |i: usize| params[i];
        let b = match kind {
            BudgetKind::Pure => Budget::Pure { epsilon: p(0) },
            BudgetKind::Approx => Budget::Approx {
                epsilon: p(0),
                delta: p(1),
            },
            BudgetKind::Kl => Budget::Kl { alpha: p(0) },
            BudgetKind::Mcdp => Budget::Mcdp {
                mu: p(0),
                tau: p(1),
            },
            BudgetKind::Zcdp => Budget::Zcdp { rho: p(0) },
            BudgetKind::Renyi => Budget::Renyi {
                alpha: p(0),
                epsilon: p(1),
            },
            BudgetKind::Gdp => Budget::Gdp { mu: p(0) },
            BudgetKind::Rao => Budget::Rao { theta: p(0) },
        };
        b.validate()?;
        Ok(b)
    }

    /// Accepts any budget the accountant can hold: finite, non-negative
    /// components, `δ < 1` and Rényi order `α > 1`.
    ///
    /// Zero components are allowed so that remaining budgets can be expressed.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        for (name, v) in kind.param_names().iter().zip(self.params()) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::MalformedBudget(format!(
                    "{kind} parameter {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        match *self {
            Budget::Approx { delta, .. } if delta >= 1.0 => Err(Error::MalformedBudget(format!(
                "approx parameter delta must be below 1, got {delta}"
            ))),
            Budget::Renyi { alpha, .. } if alpha <= 1.0 => Err(Error::MalformedBudget(format!(
                "renyi parameter alpha must exceed 1, got {alpha}"
            ))),
            _ => Ok(()),
        }
    }

    /// Stricter check for a budget charged by a single release: every
    /// component positive and `δ ∈ (0, 1)`.
    pub fn validate_release(&self) -> Result<()> {
        self.validate()?;
        let kind = self.kind();
        for (name, v) in kind.param_names().iter().zip(self.params()) {
            if v <= 0.0 {
                return Err(Error::MalformedBudget(format!(
                    "{kind} parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind())?;
        for (i, (name, v)) in self
            .kind()
            .param_names()
            .iter()
            .zip(self.params())
            .enumerate()
        {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Serialize, Deserialize)]
struct RawBudget {
    kind: BudgetKind,
    params: BTreeMap<String, f64>,
}

impl From<Budget> for RawBudget {
    fn from(b: Budget) -> Self {
        let kind = b.kind();
        let params = kind
            .param_names()
            .iter()
            .map(|n| n.to_string())
            .zip(b.params())
            .collect();
        RawBudget { kind, params }
    }
}

impl TryFrom<RawBudget> for Budget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        let names = raw.kind.param_names();
        if let Some(extra) = raw.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::MalformedBudget(format!(
                "unexpected parameter {extra:?} for {}",
                raw.kind
            )));
        }
        let values = names
            .iter()
            .map(|n| {
                raw.params.get(*n).copied().ok_or_else(|| {
                    Error::MalformedBudget(format!("{} budget is missing {n:?}", raw.kind))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Budget::from_params(raw.kind, &values)
    }
}

fn root_sum_squares(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::hypot)
}

/// Sequential composition of a homogeneous list of budgets.
///
/// | kind   | composed budget          |
/// |--------|--------------------------|
/// | pure   | Σεᵢ                      |
/// | approx | (Σεᵢ, Σδᵢ)               |
/// | kl     | Σαᵢ                      |
/// | mcdp   | (Σμᵢ, sqrt(Στᵢ²))        |
/// | zcdp   | Σρᵢ                      |
/// | renyi  | (α, Σεᵢ), common α       |
/// | gdp    | sqrt(Σμᵢ²)               |
/// | rao    | sqrt(Σθᵢ²)               |
///
/// The composed δ of approx budgets is not capped and may reach 1, at which
/// point the guarantee is vacuous.
pub fn compose(entries: &[Budget]) -> Result<Budget> {
    let first = entries
        .first()
        .ok_or_else(|| Error::MalformedBudget("cannot compose an empty list".into()))?;
    let kind = first.kind();
    for b in entries {
        b.validate()?;
        if b.kind() != kind {
            return Err(Error::MixedBudgetKinds {
                first: kind.tag(),
                other: b.kind().tag(),
            });
        }
        if let (Budget::Renyi { alpha: a0, .. }, Budget::Renyi { alpha, .. }) = (first, b) {
            if alpha != a0 {
                return Err(Error::MixedRenyiOrder {
                    first: *a0,
                    other: *alpha,
                });
            }
        }
    }
    let col = |i: usize| entries.iter().map(move |b| b.params()[i]);
    Ok(match kind {
        BudgetKind::Pure => Budget::Pure {
            epsilon: col(0).sum(),
        },
        BudgetKind::Approx => Budget::Approx {
            epsilon: col(0).sum(),
            delta: col(1).sum(),
        },
        BudgetKind::Kl => Budget::Kl {
            alpha: col(0).sum(),
        },
        BudgetKind::Mcdp => Budget::Mcdp {
            mu: col(0).sum(),
            tau: root_sum_squares(col(1)),
        },
        BudgetKind::Zcdp => Budget::Zcdp { rho: col(0).sum() },
        BudgetKind::Renyi => Budget::Renyi {
            alpha: first.params()[0],
            epsilon: col(1).sum(),
        },
        BudgetKind::Gdp => Budget::Gdp {
            mu: root_sum_squares(col(0)),
        },
        BudgetKind::Rao => Budget::Rao {
            theta: root_sum_squares(col(0)),
        },
    })
}

/// Target of a budget conversion. Converting a Rao budget back to approximate
/// DP needs the δ at which the Gaussian guarantee is stated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConversionTarget {
    Rao,
    Pure,
    Approx { delta: f64 },
    Gdp,
}

impl ConversionTarget {
    pub fn kind(&self) -> BudgetKind {
        match self {
            ConversionTarget::Rao => BudgetKind::Rao,
            ConversionTarget::Pure => BudgetKind::Pure,
            ConversionTarget::Approx { .. } => BudgetKind::Approx,
            ConversionTarget::Gdp => BudgetKind::Gdp,
        }
    }
}

/// `sqrt(2 ln(1.25/δ))`, the Gaussian-mechanism factor linking ε and σ/Δ.
fn gaussian_factor(delta: f64) -> f64 {
    (2.0 * (1.25 / delta).ln()).sqrt()
}

/// Converts a budget to another definition, for the pairs where a mechanism
/// satisfying one is known to satisfy the other:
///
/// * Laplace: pure ε ⇄ Rao θ = ε;
/// * Gaussian: approx (ε, δ) ⇄ Rao θ = ε / sqrt(2 ln(1.25/δ));
/// * Gaussian: GDP μ ⇄ Rao θ = μ.
///
/// Every other combination is an [`Error::UnsupportedConversion`]. Converting
/// a budget to its own kind returns it unchanged.
pub fn convert(
    budget: &Budget,
    target: ConversionTarget,
    context: MechanismKind,
) -> Result<Budget> {
    budget.validate()?;
    let unsupported = || Error::UnsupportedConversion {
        from: budget.kind().tag(),
        to: target.kind().tag(),
        context: context.name(),
    };
    if budget.kind() == target.kind() {
        return match (budget, target) {
            (Budget::Approx { delta, .. }, ConversionTarget::Approx { delta: d })
                if *delta != d =>
            {
                Err(unsupported())
            }
            _ => Ok(*budget),
        };
    }
    match (context, *budget, target) {
        (MechanismKind::Laplace, Budget::Pure { epsilon }, ConversionTarget::Rao) => {
            Ok(Budget::Rao { theta: epsilon })
        }
        (MechanismKind::Laplace, Budget::Rao { theta }, ConversionTarget::Pure) => {
            Ok(Budget::Pure { epsilon: theta })
        }
        (MechanismKind::Gaussian, Budget::Approx { epsilon, delta }, ConversionTarget::Rao) => {
            if delta <= 0.0 {
                return Err(Error::MalformedBudget(
                    "approx delta must be positive to convert".into(),
                ));
            }
            Ok(Budget::Rao {
                theta: epsilon / gaussian_factor(delta),
            })
        }
        (MechanismKind::Gaussian, Budget::Rao { theta }, ConversionTarget::Approx { delta }) => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::MalformedBudget(format!(
                    "approx delta must lie in (0, 1), got {delta}"
                )));
            }
            Ok(Budget::Approx {
                epsilon: theta * gaussian_factor(delta),
                delta,
            })
        }
        (MechanismKind::Gaussian, Budget::Gdp { mu }, ConversionTarget::Rao) => {
            Ok(Budget::Rao { theta: mu })
        }
        (MechanismKind::Gaussian, Budget::Rao { theta }, ConversionTarget::Gdp) => {
            Ok(Budget::Gdp { mu: theta })
        }
        _ => Err(unsupported()),
    }
}
