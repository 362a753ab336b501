//! Named choices shared by command-line flags and study configs.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use esb_core::backtests::{Backtest, CcVariant, EsrMode};
use esb_core::evaluate::Dgp;
use esb_core::simulate::{EgarchSpec, GarchSpec, HsConvention, MisspecKind};
use esb_core::Hypothesis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    #[default]
    TwoSided,
    OneSided,
}

impl From<Side> for Hypothesis {
    fn from(s: Side) -> Self {
        match s {
            Side::TwoSided => Hypothesis::TwoSided,
            Side::OneSided => Hypothesis::OneSidedLess,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Asymptotic,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DgpName {
    /// GARCH(1,1) with standardized t(5) innovations.
    #[default]
    GarchT,
    /// EGARCH(1,1) with standardized t(7.24) innovations.
    EgarchT,
    /// GARCH(1,1) with normal innovations.
    GarchN,
}

impl DgpName {
    pub fn dgp(self) -> Dgp {
        match self {
            DgpName::GarchT => Dgp::Garch(GarchSpec::reference()),
            DgpName::EgarchT => Dgp::Egarch(EgarchSpec::reference()),
            DgpName::GarchN => Dgp::Garch(GarchSpec::gaussian_reference()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecasterName {
    Oracle,
    /// Historical Simulation.
    Hs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    PastForecasts,
    CurrentQuantile,
}

impl From<Convention> for HsConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::PastForecasts => HsConvention::PastForecasts,
            Convention::CurrentQuantile => HsConvention::CurrentQuantile,
        }
    }
}

/// Misspecification design, by letter or by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignName {
    #[serde(alias = "a")]
    ArchReaction,
    #[serde(alias = "b")]
    UncondVariance,
    #[serde(alias = "c")]
    Persistence,
    #[serde(alias = "d")]
    DegreesOfFreedom,
    #[serde(alias = "e")]
    ProbabilityLevel,
}

impl From<DesignName> for MisspecKind {
    fn from(d: DesignName) -> Self {
        match d {
            DesignName::ArchReaction => MisspecKind::ArchReaction,
            DesignName::UncondVariance => MisspecKind::UncondVariance,
            DesignName::Persistence => MisspecKind::Persistence,
            DesignName::DegreesOfFreedom => MisspecKind::DegreesOfFreedom,
            DesignName::ProbabilityLevel => MisspecKind::ProbabilityLevel,
        }
    }
}

/// Test names accepted by `--tests` and the `tests` config key.
pub const TEST_NAMES: [&str; 8] = [
    "esr-bivariate",
    "esr-bivariate-boot",
    "esr-intercept",
    "esr-intercept-boot",
    "er",
    "er-std",
    "cc-simple",
    "cc-general",
];

/// Builds the backtests named in `names`.
///
/// Plain ESR names use `mode`; the `-boot` forms always bootstrap. `draws`
/// is the bootstrap size of the ESR and ER tests. The bivariate test is
/// two-sided whatever `side` says.
pub fn parse_tests(names: &[String], mode: Mode, draws: usize, side: Side) -> anyhow::Result<Vec<Backtest>> {
    if names.is_empty() {
        anyhow::bail!("no tests requested; choose from {}", TEST_NAMES.join(", "));
    }
    let side = Hypothesis::from(side);
    let boot = EsrMode::Bootstrap(draws);
    let plain = match mode {
        Mode::Asymptotic => EsrMode::Asymptotic,
        Mode::Bootstrap => boot,
    };
    if draws == 0 {
        anyhow::bail!("--bootstrap must be positive");
    }
    let uses_esr_boot = names.iter().any(|n| n.trim().ends_with("-boot"))
        || (mode == Mode::Bootstrap && names.iter().any(|n| n.trim().starts_with("esr-")));
    if uses_esr_boot {
        boot.validate()?;
    }
    names
        .iter()
        .map(|n| {
            Ok(match n.trim() {
                "esr-bivariate" => Backtest::EsrBivariate { mode: plain },
                "esr-bivariate-boot" => Backtest::EsrBivariate { mode: boot },
                "esr-intercept" => Backtest::EsrIntercept { mode: plain, side },
                "esr-intercept-boot" => Backtest::EsrIntercept { mode: boot, side },
                "er" | "er-std" => Backtest::Er {
                    standardized: n.trim() == "er-std",
                    side,
                    draws,
                },
                "cc-simple" => Backtest::Cc {
                    variant: CcVariant::Simple,
                    side,
                },
                "cc-general" => Backtest::Cc {
                    variant: CcVariant::General,
                    side,
                },
                other => anyhow::bail!("unknown test `{other}`; choose from {}", TEST_NAMES.join(", ")),
            })
        })
        .collect()
}

/// Forecast columns a test reads besides `es`.
pub fn required_columns(test: &Backtest) -> &'static [&'static str] {
    match test {
        Backtest::EsrBivariate { .. } | Backtest::EsrIntercept { .. } => &[],
        Backtest::Er {
            standardized: false, ..
        }
        | Backtest::Cc {
            variant: CcVariant::Simple,
            ..
        } => &["var"],
        Backtest::Er { .. } | Backtest::Cc { .. } => &["var", "sigma"],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_name_parses_and_round_trips() {
        let names: Vec<String> = TEST_NAMES.iter().map(|s| s.to_string()).collect();
        let tests = parse_tests(&names, Mode::Asymptotic, 200, Side::TwoSided).unwrap();
        let back: Vec<String> = tests.iter().map(|t| t.name()).collect();
        assert_eq!(back, names);
    }

    #[test]
    fn mode_applies_to_plain_esr_names() {
        let t = parse_tests(&["esr-intercept".into()], Mode::Bootstrap, 300, Side::OneSided).unwrap();
        assert_eq!(
            t[0],
            Backtest::EsrIntercept {
                mode: EsrMode::Bootstrap(300),
                side: Hypothesis::OneSidedLess
            }
        );
        assert!(parse_tests(&["nope".into()], Mode::Asymptotic, 100, Side::TwoSided).is_err());
    }
}
