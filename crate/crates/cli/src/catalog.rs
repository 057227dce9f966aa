//! The checks a scenario can run.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    SobolevEuclidean,
    Isoperimetric,
    Fwc,
    MichaelSimon,
    LogSobolev,
    RiemannianIsoperimetric,
    RiemannianFwc,
    HeintzeKarcher,
    RiccatiSuite,
    CoverageSuite,
}

const COMMON: &[&str] = &["check", "levels", "seed", "target", "tolerance", "min_ratio", "min_margin"];

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub theorem: &'static str,
    pub statement: &'static str,
    pub required: Vec<&'static str>,
    pub optional: Vec<&'static str>,
}

impl CheckId {
    pub const ALL: [CheckId; 10] = [
        CheckId::SobolevEuclidean,
        CheckId::Isoperimetric,
        CheckId::Fwc,
        CheckId::MichaelSimon,
        CheckId::LogSobolev,
        CheckId::RiemannianIsoperimetric,
        CheckId::RiemannianFwc,
        CheckId::HeintzeKarcher,
        CheckId::RiccatiSuite,
        CheckId::CoverageSuite,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CheckId::SobolevEuclidean => "sobolev_euclidean",
            CheckId::Isoperimetric => "isoperimetric",
            CheckId::Fwc => "fwc",
            CheckId::MichaelSimon => "michael_simon",
            CheckId::LogSobolev => "log_sobolev",
            CheckId::RiemannianIsoperimetric => "riemannian_isoperimetric",
            CheckId::RiemannianFwc => "riemannian_fwc",
            CheckId::HeintzeKarcher => "heintze_karcher",
            CheckId::RiccatiSuite => "riccati_suite",
            CheckId::CoverageSuite => "coverage_suite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == s)
    }

    /// Theorem identifier the check embodies.
    pub fn theorem(self) -> &'static str {
        match self {
            CheckId::SobolevEuclidean => "thm:euclidean-sobolev",
            CheckId::Isoperimetric => "thm:euclidean-isoperimetric",
            CheckId::Fwc => "thm:fenchel-willmore-chen",
            CheckId::MichaelSimon => "thm:michael-simon-sharp",
            CheckId::LogSobolev => "thm:log-sobolev-submanifold",
            CheckId::RiemannianIsoperimetric => "thm:riemannian-isoperimetric",
            CheckId::RiemannianFwc => "thm:riemannian-fwc",
            CheckId::HeintzeKarcher => "thm:heintze-karcher-tube",
            CheckId::RiccatiSuite => "prop:riccati-monotonicity",
            CheckId::CoverageSuite => "lem:abp-contact-coverage",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            CheckId::SobolevEuclidean => "∫|∇f| + ∫_∂D f ≥ n|Bⁿ|^(1/n) (∫f^(n/(n−1)))^((n−1)/n) on a planar domain",
            CheckId::Isoperimetric => "|∂D| ≥ n|Bⁿ|^(1/n) |D|^((n−1)/n)",
            CheckId::Fwc => "∫(|H|/n)ⁿ ≥ |Sⁿ| for a closed surface or curve",
            CheckId::MichaelSimon => "∫√(|∇f|² + f²|H|²) + ∫_∂Σ f ≥ c(n,m)(∫f^(n/(n−1)))^((n−1)/n), codimension m ≥ 2",
            CheckId::LogSobolev => "∫f(log f + n + (n/2)log 4π) − ∫|∇f|²/f − ∫f|H|² ≤ (∫f) log ∫f on a closed surface",
            CheckId::RiemannianIsoperimetric => "|∂D| ≥ n|Bⁿ|^(1/n) θ^(1/n) |D|^((n−1)/n) on a warped model",
            CheckId::RiemannianFwc => "∫(|H|/(n−1))^(n−1) ≥ |S^(n−1)| θ for a geodesic sphere of a warped model",
            CheckId::HeintzeKarcher => "tube volume ≤ ∫_Σ∫_{|y|<1} r(1 − r⟨H,y⟩/(n−1))₊^(n−1)",
            CheckId::RiccatiSuite => "Jacobi/Riccati closed forms and monotonicity of the Jacobian ratios",
            CheckId::CoverageSuite => "contact-set coverage and pointwise Jacobian bounds",
        }
    }

    pub fn required(self) -> &'static [&'static str] {
        match self {
            CheckId::SobolevEuclidean | CheckId::Isoperimetric | CheckId::Fwc => &["geometry"],
            CheckId::MichaelSimon | CheckId::LogSobolev => &["geometry"],
            CheckId::RiemannianIsoperimetric => &["model", "outer"],
            CheckId::RiemannianFwc => &["model", "rho"],
            CheckId::HeintzeKarcher => &["model", "rho", "radius"],
            CheckId::RiccatiSuite => &[],
            CheckId::CoverageSuite => &["geometry", "mode"],
        }
    }

    fn specific(self) -> &'static [&'static str] {
        match self {
            CheckId::Isoperimetric | CheckId::Fwc => &["shape", "mesh"],
            CheckId::SobolevEuclidean | CheckId::MichaelSimon | CheckId::LogSobolev => &["shape", "mesh", "density"],
            CheckId::RiemannianIsoperimetric => &["model", "n", "alpha", "s", "r_max", "inner", "outer"],
            CheckId::RiemannianFwc => &["model", "n", "alpha", "s", "r_max", "rho"],
            CheckId::HeintzeKarcher => &["model", "n", "alpha", "s", "r_max", "rho", "radius"],
            CheckId::RiccatiSuite => &["count"],
            CheckId::CoverageSuite => &["shape", "mesh", "density", "mode", "samples", "min_covered", "max_negative"],
        }
    }

    /// Every key a scenario of this check accepts (shape parameters are
    /// `shape.<name>`).
    pub fn keys(self) -> Vec<&'static str> {
        COMMON.iter().chain(self.specific()).copied().collect()
    }

    pub fn default_levels(self) -> &'static [u32] {
        match self {
            CheckId::SobolevEuclidean | CheckId::Isoperimetric | CheckId::MichaelSimon => &[4, 5],
            CheckId::Fwc | CheckId::LogSobolev | CheckId::CoverageSuite => &[3, 4],
            _ => &[0],
        }
    }

    pub fn uses_mesh(self) -> bool {
        matches!(
            self,
            CheckId::SobolevEuclidean
                | CheckId::Isoperimetric
                | CheckId::Fwc
                | CheckId::MichaelSimon
                | CheckId::LogSobolev
                | CheckId::CoverageSuite
        )
    }

    pub fn entry(self) -> CatalogEntry {
        let required: Vec<&'static str> = self
            .required()
            .iter()
            .map(|k| if *k == "geometry" { "shape|mesh" } else { k })
            .collect();
        let optional = self
            .keys()
            .into_iter()
            .filter(|k| *k != "check" && !self.required().contains(k) && !(required.contains(&"shape|mesh") && (*k == "shape" || *k == "mesh")))
            .collect();
        CatalogEntry {
            id: self.id(),
            theorem: self.theorem(),
            statement: self.statement(),
            required,
            optional,
        }
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    CheckId::ALL.iter().map(|c| c.entry()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for c in CheckId::ALL {
            assert_eq!(CheckId::parse(c.id()), Some(c));
        }
        assert_eq!(CheckId::parse("nope"), None);
    }

    #[test]
    fn catalog_lists_every_check_with_theorem() {
        let cat = catalog();
        assert_eq!(cat.len(), 10);
        assert!(cat.iter().all(|e| e.theorem.contains(':')));
        let hk = cat.iter().find(|e| e.id == "heintze_karcher").unwrap();
        assert_eq!(hk.required, vec!["model", "rho", "radius"]);
    }
}
