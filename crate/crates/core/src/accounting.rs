//! Byte accounting and latency order statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Bytes per stored weight in the memory accounting (32-bit floats).
pub const BYTES_PER_WEIGHT: usize = 4;

/// Weight bytes read by one forward pass, with both MB renderings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    pub bytes: u64,
    /// `bytes / 10⁶`
    pub mb_decimal: f64,
    /// `bytes / 2²⁰`
    pub mib_binary: f64,
}

impl MemoryFootprint {
    pub fn from_parameter_count(parameters: usize) -> Self {
        let bytes = (parameters * BYTES_PER_WEIGHT) as u64;
        MemoryFootprint {
            bytes,
            mb_decimal: bytes as f64 / 1e6,
            mib_binary: bytes as f64 / (1u64 << 20) as f64,
        }
    }
}

/// `memory_per_inference`: every trainable weight is read once per forward
/// pass at 32-bit precision. Activation traffic is not counted.
pub fn memory_per_inference(model: &crate::nn::Model) -> MemoryFootprint {
    MemoryFootprint::from_parameter_count(model.parameter_count())
}

/// Nearest-rank percentile: the `⌈p·N/100⌉`-th smallest of `sorted`.
///
/// `sorted` must be ascending and non-empty; `p` in `(0, 100]`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    let rank = libm::ceil(p / 100.0 * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Latency summary in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub samples: usize,
}

impl LatencyStats {
    /// Summarizes raw samples (milliseconds, any order).
    pub fn from_samples_ms(samples: &[f64]) -> Self {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        LatencyStats {
            mean_ms: mean,
            p50_ms: nearest_rank(&sorted, 50.0),
            p90_ms: nearest_rank(&sorted, 90.0),
            p99_ms: nearest_rank(&sorted, 99.0),
            min_ms: sorted[0],
            max_ms: sorted[sorted.len() - 1],
            samples: sorted.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_memory_figures() {
        let cases = [
            (623_290, 2_493_160u64),
            (7_852, 31_408),
            (24_709, 98_836),
            (942, 3_768),
        ];
        for (params, bytes) in cases {
            assert_eq!(MemoryFootprint::from_parameter_count(params).bytes, bytes);
        }
        let round = |v: f64, places: i32| libm::round(v * libm::pow(10.0, places as f64)) / libm::pow(10.0, places as f64);
        assert_eq!(round(MemoryFootprint::from_parameter_count(623_290).mb_decimal, 3), 2.493);
        assert_eq!(round(MemoryFootprint::from_parameter_count(7_852).mb_decimal, 3), 0.031);
        assert_eq!(round(MemoryFootprint::from_parameter_count(24_709).mib_binary, 6), 0.094257);
        assert_eq!(round(MemoryFootprint::from_parameter_count(942).mib_binary, 6), 0.003593);
    }

    #[test]
    fn nearest_rank_definition() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&s, 50.0), 50.0);
        assert_eq!(nearest_rank(&s, 90.0), 90.0);
        assert_eq!(nearest_rank(&s, 99.0), 99.0);
        assert_eq!(nearest_rank(&s, 100.0), 100.0);
        let s = [1.0, 2.0, 3.0];
        // ⌈0.5·3⌉ = 2
        assert_eq!(nearest_rank(&s, 50.0), 2.0);
        assert_eq!(nearest_rank(&s, 99.0), 3.0);
        assert_eq!(nearest_rank(&[7.0], 1.0), 7.0);
    }

    #[test]
    fn stats_are_ordered() {
        let samples = [5.0, 1.0, 3.0, 2.0, 4.0, 10.0, 0.5];
        let s = LatencyStats::from_samples_ms(&samples);
        assert!(s.p50_ms <= s.p90_ms && s.p90_ms <= s.p99_ms);
        assert_eq!(s.min_ms, 0.5);
        assert_eq!(s.max_ms, 10.0);
        assert_eq!(s.samples, 7);
    }
}
