//! Rule-based choice among the four join variants from workload features.
//!
//! The thresholds are the only two the measurements suggest: a match ratio
//! of 25% (below it materialization stops dominating) and a Zipf factor of 1
//! (above it foreign keys concentrate on few partners).

use std::fmt::Write;

use crate::engine::Variant;
use crate::workloads::WorkloadSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadFeatures {
    pub r_payloads: usize,
    pub s_payloads: usize,
    pub match_ratio: f64,
    pub zipf_factor: f64,
    pub key_bytes: usize,
    pub payload_bytes: usize,
}

impl WorkloadFeatures {
    /// At most one payload column per side.
    pub fn is_narrow(&self) -> bool {
        self.r_payloads <= 1 && self.s_payloads <= 1
    }

    pub fn has_wide_values(&self) -> bool {
        self.key_bytes >= 8 || self.payload_bytes >= 8
    }
}

impl From<&WorkloadSpec> for WorkloadFeatures {
    fn from(spec: &WorkloadSpec) -> Self {
        WorkloadFeatures {
            r_payloads: spec.r_payloads,
            s_payloads: spec.s_payloads,
            match_ratio: spec.match_ratio,
            zipf_factor: spec.zipf_factor,
            key_bytes: spec.key_kind.byte_width(),
            payload_bytes: spec.payload_kind.byte_width(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectorConfig {
    /// Below this match ratio the unoptimized pattern wins.
    pub low_match: f64,
    /// Above this Zipf factor foreign keys count as skewed.
    pub skew: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            low_match: 0.25,
            skew: 1.0,
        }
    }
}

impl SelectorConfig {
    pub fn choose(&self, f: &WorkloadFeatures) -> Variant {
        if f.match_ratio < self.low_match {
            Variant::PhjUm
        } else if f.is_narrow() {
            if f.zipf_factor > self.skew {
                Variant::PhjOm
            } else {
                Variant::PhjUm
            }
        } else {
            Variant::PhjOm
        }
    }

    pub fn choose_smj_only(&self, f: &WorkloadFeatures) -> Variant {
        if f.has_wide_values() || f.match_ratio < self.low_match || f.zipf_factor > self.skew || f.is_narrow() {
            Variant::SmjUm
        } else {
            Variant::SmjOm
        }
    }

    /// Both trees as indented text.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let (m, z) = (self.low_match, self.skew);
        let _ = writeln!(s, "all variants:");
        let _ = writeln!(s, "  match_ratio < {m}: PHJ-UM");
        let _ = writeln!(s, "  else narrow (<= 1 payload per side):");
        let _ = writeln!(s, "    zipf > {z}: PHJ-OM");
        let _ = writeln!(s, "    else: PHJ-UM");
        let _ = writeln!(s, "  else: PHJ-OM");
        let _ = writeln!(s, "sort-merge only:");
        let _ = writeln!(s, "  8-byte keys or payloads: SMJ-UM");
        let _ = writeln!(s, "  else match_ratio < {m}: SMJ-UM");
        let _ = writeln!(s, "  else zipf > {z}: SMJ-UM");
        let _ = writeln!(s, "  else narrow: SMJ-UM");
        let _ = writeln!(s, "  else: SMJ-OM");
        s
    }
}

pub fn choose(features: &WorkloadFeatures) -> Variant {
    SelectorConfig::default().choose(features)
}

pub fn choose_smj_only(features: &WorkloadFeatures) -> Variant {
    SelectorConfig::default().choose_smj_only(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide(match_ratio: f64, zipf_factor: f64, bytes: usize) -> WorkloadFeatures {
        WorkloadFeatures {
            r_payloads: 2,
            s_payloads: 2,
            match_ratio,
            zipf_factor,
            key_bytes: bytes,
            payload_bytes: bytes,
        }
    }

    #[test]
    fn scenarios() {
        assert_eq!(choose(&wide(1.0, 0.0, 4)), Variant::PhjOm);
        assert_eq!(choose(&wide(0.1, 0.0, 4)), Variant::PhjUm);
        assert_eq!(choose(&wide(1.0, 2.0, 4)), Variant::PhjOm);
        let narrow = WorkloadFeatures { r_payloads: 1, s_payloads: 0, ..wide(1.0, 0.0, 4) };
        assert_eq!(choose(&narrow), Variant::PhjUm);
        assert_eq!(choose(&WorkloadFeatures { zipf_factor: 1.5, ..narrow }), Variant::PhjOm);

        assert_eq!(choose_smj_only(&wide(1.0, 0.0, 4)), Variant::SmjOm);
        assert_eq!(choose_smj_only(&wide(1.0, 0.0, 8)), Variant::SmjUm);
        assert_eq!(choose_smj_only(&wide(0.1, 0.0, 4)), Variant::SmjUm);
    }

    #[test]
    fn recalibrated_thresholds() {
        let cfg = SelectorConfig { low_match: 0.05, skew: 1.0 };
        assert_eq!(cfg.choose(&wide(0.1, 0.0, 4)), Variant::PhjOm);
        assert!(cfg.describe().contains("match_ratio < 0.05"));
    }
}
