//! Synthetic order-book feature generator with planted anomaly episodes.
//!
//! The base regime is a tick-quantised mid-price random walk with
//! log-AR(1) depth, volume and spread processes. Trade volume and spread
//! respond to the size of the mid-price move. Anomalies are contiguous
//! episodes of one of four archetypes and every tick inside an episode is
//! labeled.
//!
//! Feature layout for `L` depth levels (`d = 2L + 2`, default `L = 4`):
//! `bid_depth_1..L, ask_depth_1..L, trade_volume, spread`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::{TickRecord, TickSeries};
use crate::error::{Error, Result};

pub const MIN_SYNTH_LENGTH: usize = 100;
const PRICE_STEP: f64 = 1e-5;
const BASE_SPREAD: f64 = 1.2e-5;
const BASE_VOLUME: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    LiquidityExhaustion,
    SpreadSpike,
    VolumeImbalance,
    FlashCrash,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::LiquidityExhaustion,
        Archetype::SpreadSpike,
        Archetype::VolumeImbalance,
        Archetype::FlashCrash,
    ];

    /// Inclusive episode length range in ticks.
    pub fn length_range(self) -> (usize, usize) {
        match self {
            Archetype::LiquidityExhaustion => (5, 30),
            Archetype::SpreadSpike => (2, 10),
            Archetype::VolumeImbalance => (5, 20),
            Archetype::FlashCrash => (10, 60),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchetypeMix {
    pub liquidity_exhaustion: f64,
    pub spread_spike: f64,
    pub volume_imbalance: f64,
    pub flash_crash: f64,
}

impl Default for ArchetypeMix {
    fn default() -> Self {
        Self {
            liquidity_exhaustion: 0.25,
            spread_spike: 0.25,
            volume_imbalance: 0.25,
            flash_crash: 0.25,
        }
    }
}

impl ArchetypeMix {
    fn weights(&self) -> [(Archetype, f64); 4] {
        [
            (Archetype::LiquidityExhaustion, self.liquidity_exhaustion),
            (Archetype::SpreadSpike, self.spread_spike),
            (Archetype::VolumeImbalance, self.volume_imbalance),
            (Archetype::FlashCrash, self.flash_crash),
        ]
    }

    fn sample(&self, rng: &mut impl Rng) -> Archetype {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let weights = self.weights();
        for (a, w) in weights {
            acc += w;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding slack; take the last archetype with weight.
        weights
            .iter()
            .rev()
            .find(|(_, w)| *w > 0.0)
            .map_or(Archetype::FlashCrash, |(a, _)| *a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub length: usize,
    pub dimension: usize,
    pub base_mid_price: f64,
    pub anomaly_rate: f64,
    pub archetype_mix: ArchetypeMix,
    pub seed: u64,
    pub start_timestamp_ms: i64,
    pub tick_interval_ms: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            length: 100_000,
            dimension: 10,
            base_mid_price: 1.1,
            anomaly_rate: 0.005,
            archetype_mix: ArchetypeMix::default(),
            seed: 42,
            // 2023-01-01T00:00:00Z
            start_timestamp_ms: 1_672_531_200_000,
            tick_interval_ms: 1_000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_SYNTH_LENGTH {
            return Err(Error::Config(format!(
                "length {} is below the minimum of {MIN_SYNTH_LENGTH} ticks",
                self.length
            )));
        }
        if self.dimension < 8 || self.dimension % 2 != 0 {
            return Err(Error::Config(format!(
                "dimension must be 2L+2 with at least 3 depth levels, got {}",
                self.dimension
            )));
        }
        if !(0.0..0.5).contains(&self.anomaly_rate) {
            return Err(Error::Config(format!(
                "anomaly_rate must lie in [0, 0.5), got {}",
                self.anomaly_rate
            )));
        }
        let weights = self.archetype_mix.weights();
        if weights.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::Config("archetype proportions must be non-negative".into()));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "archetype proportions must sum to 1, got {total}"
            )));
        }
        if !(self.base_mid_price > 0.0) || self.tick_interval_ms <= 0 {
            return Err(Error::Config(
                "base_mid_price and tick_interval_ms must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn depth_levels(&self) -> usize {
        (self.dimension - 2) / 2
    }
}

/// A planted anomaly covering ticks `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub archetype: Archetype,
    pub start: usize,
    pub len: usize,
}

impl Episode {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, t: usize) -> bool {
        (self.start..self.end()).contains(&t)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub series: TickSeries,
    /// Episodes in chronological order; their union is exactly the labeled ticks.
    pub episodes: Vec<Episode>,
    pub mid_prices: Vec<f64>,
}

/// Column names used by the depth export for a given number of levels.
pub fn depth_feature_names(levels: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=levels).map(|l| format!("bid_depth_{l}")).collect();
    names.extend((1..=levels).map(|l| format!("ask_depth_{l}")));
    names.push("trade_volume".into());
    names.push("spread".into());
    names
}

/// Generic `f1..fd` names used by the ingest format.
pub fn generic_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("f{j}")).collect()
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let episodes = plan_episodes(cfg, &mut rng)?;
    let (records, mid_prices) = simulate(cfg, &episodes, &mut rng);
    let series = TickSeries::new(generic_feature_names(cfg.dimension), records)?;
    Ok(SyntheticData {
        series,
        episodes,
        mid_prices,
    })
}

fn plan_episodes(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Episode>> {
    let t = cfg.length;
    let target = (cfg.anomaly_rate * t as f64).round() as usize;
    let mut drafts: Vec<(Archetype, usize)> = Vec::new();
    let mut total = 0usize;
    while total < target {
        let archetype = cfg.archetype_mix.sample(rng);
        let (lo, hi) = archetype.length_range();
        let mut len = rng.random_range(lo..=hi);
        if total + len > target {
            len = (target - total).max(lo);
        }
        drafts.push((archetype, len));
        total += len;
    }
    let n = drafts.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Every pair of neighbouring episodes needs at least one clean tick between them.
    let free = t - total;
    if free < n + 1 {
        return Err(Error::Config(format!(
            "cannot place {n} episodes covering {total} ticks in a series of {t}"
        )));
    }
    let slack = free - (n - 1);
    let weights: Vec<f64> = (0..=n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let wsum: f64 = weights.iter().sum();
    let mut gaps: Vec<usize> = weights
        .iter()
        .map(|w| ((w / wsum) * slack as f64).floor() as usize)
        .collect();
    let used: usize = gaps.iter().sum();
    gaps[n] += slack - used;
    for g in gaps.iter_mut().take(n).skip(1) {
        *g += 1;
    }

    let mut episodes = Vec::with_capacity(n);
    let mut cursor = 0usize;
    for (i, (archetype, len)) in drafts.into_iter().enumerate() {
        cursor += gaps[i];
        episodes.push(Episode {
            archetype,
            start: cursor,
            len,
        });
        cursor += len;
    }
    debug_assert_eq!(cursor + gaps[n], t);
    Ok(episodes)
}

/// Per-episode effect parameters, drawn once when the episode starts.
#[derive(Debug, Clone, Copy)]
enum Effect {
    LiquidityExhaustion { factor: f64 },
    SpreadSpike { factor: f64 },
    VolumeImbalance { bid_side: bool, factor: f64 },
    FlashCrash { drop_steps: f64, drop_ticks: usize },
}

fn draw_effect(archetype: Archetype, len: usize, rng: &mut ChaCha8Rng) -> Effect {
    match archetype {
        Archetype::LiquidityExhaustion => Effect::LiquidityExhaustion {
            factor: rng.random_range(0.05..=0.2),
        },
        Archetype::SpreadSpike => Effect::SpreadSpike {
            factor: rng.random_range(5.0..=20.0),
        },
        Archetype::VolumeImbalance => Effect::VolumeImbalance {
            bid_side: rng.random_bool(0.5),
            factor: rng.random_range(3.0..=8.0),
        },
        Archetype::FlashCrash => Effect::FlashCrash {
            drop_steps: rng.random_range(6..=15) as f64,
            drop_ticks: rng.random_range(2..=4).min(len - 1),
        },
    }
}

struct Ar1 {
    phi: f64,
    sigma: f64,
    state: f64,
}

impl Ar1 {
    fn new(phi: f64, sigma: f64) -> Self {
        Self {
            phi,
            sigma,
            state: 0.0,
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.state = self.phi * self.state + self.sigma * z;
        self.state
    }
}

fn simulate(cfg: &SynthConfig, episodes: &[Episode], rng: &mut ChaCha8Rng) -> (Vec<TickRecord>, Vec<f64>) {
    let levels = cfg.depth_levels();
    let mut depth_noise: Vec<Ar1> = (0..2 * levels).map(|_| Ar1::new(0.97, 0.04)).collect();
    let mut volume_noise = Ar1::new(0.8, 0.25);
    let mut spread_noise = Ar1::new(0.9, 0.05);
    let base_depth: Vec<f64> = (1..=levels).map(|l| 1.0 + 0.5 * l as f64).collect();

    let mut records = Vec::with_capacity(cfg.length);
    let mut mids = Vec::with_capacity(cfg.length);
    let mut walk = cfg.base_mid_price;
    let mut prev_mid = walk;
    let mut next_episode = 0usize;
    let mut active: Option<(Episode, Effect)> = None;

    for t in 0..cfg.length {
        if let Some((ep, _)) = active {
            if t >= ep.end() {
                active = None;
            }
        }
        if active.is_none() && next_episode < episodes.len() && episodes[next_episode].start == t {
            let ep = episodes[next_episode];
            active = Some((ep, draw_effect(ep.archetype, ep.len, rng)));
            next_episode += 1;
        }

        let u: f64 = rng.random();
        walk += if u < 0.25 {
            -PRICE_STEP
        } else if u < 0.75 {
            0.0
        } else {
            PRICE_STEP
        };

        let mut depth: Vec<f64> = (0..2 * levels)
            .map(|i| base_depth[i % levels] * depth_noise[i].step(rng).exp())
            .collect();
        let mut volume = BASE_VOLUME * volume_noise.step(rng).exp();
        let mut spread = BASE_SPREAD * spread_noise.step(rng).exp();

        // Flash crashes move the mid itself; the other archetypes act on features.
        let mut crash_stress = 0.0;
        let mut mid = walk;
        if let Some((ep, effect)) = active {
            let i = t - ep.start;
            match effect {
                Effect::LiquidityExhaustion { factor } => {
                    for l in 0..levels.min(3) {
                        depth[l] *= factor;
                        depth[levels + l] *= factor;
                    }
                }
                Effect::SpreadSpike { factor } => spread *= factor,
                Effect::VolumeImbalance { bid_side, factor } => {
                    let side = if bid_side { 0 } else { levels };
                    for l in 0..levels {
                        depth[side + l] *= factor;
                    }
                    volume *= factor;
                }
                Effect::FlashCrash {
                    drop_steps,
                    drop_ticks,
                } => {
                    let depth_frac = if i < drop_ticks {
                        (i + 1) as f64 / drop_ticks as f64
                    } else {
                        let rec_len = (ep.len - drop_ticks) as f64;
                        1.0 - (i + 1 - drop_ticks) as f64 / rec_len
                    };
                    mid -= drop_steps * PRICE_STEP * depth_frac;
                    crash_stress = depth_frac;
                }
            }
        }

        let move_steps = (mid - prev_mid).abs() / PRICE_STEP;
        volume *= 1.0 + 0.5 * move_steps;
        spread *= (1.0 + 0.25 * move_steps) * (1.0 + 2.0 * crash_stress);
        if crash_stress > 0.0 {
            for d in depth.iter_mut().take(levels) {
                *d *= 1.0 - 0.8 * crash_stress;
            }
        }
        prev_mid = mid;

        depth.push(volume);
        depth.push(spread);
        let label = active.is_some();
        records.push(TickRecord {
            timestamp: cfg.start_timestamp_ms + t as i64 * cfg.tick_interval_ms,
            features: depth,
            label,
        });
        mids.push(mid);
    }
    (records, mids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rate: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            length: 10_000,
            anomaly_rate: rate,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_rate_has_no_labels() {
        let data = generate_synthetic(&small(0.0, 1)).unwrap();
        assert_eq!(data.series.positive_count(), 0);
        assert!(data.episodes.is_empty());
    }

    #[test]
    fn labeled_fraction_near_rate() {
        let data = generate_synthetic(&small(0.005, 42)).unwrap();
        let frac = data.series.positive_count() as f64 / data.series.len() as f64;
        assert!((0.002..=0.010).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&small(0.01, 7)).unwrap();
        let b = generate_synthetic(&small(0.01, 7)).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.episodes, b.episodes);
    }

    #[test]
    fn different_seeds_differ_early() {
        let a = generate_synthetic(&small(0.01, 1)).unwrap();
        let b = generate_synthetic(&small(0.01, 2)).unwrap();
        assert_ne!(a.series.records()[..100], b.series.records()[..100]);
    }

    #[test]
    fn labels_equal_episode_union() {
        let data = generate_synthetic(&small(0.03, 3)).unwrap();
        for (t, rec) in data.series.records().iter().enumerate() {
            let hits = data.episodes.iter().filter(|e| e.contains(t)).count();
            assert!(hits <= 1);
            assert_eq!(rec.label, hits == 1, "tick {t}");
        }
        for pair in data.episodes.windows(2) {
            assert!(pair[0].end() < pair[1].start, "episodes must be separated");
        }
    }

    #[test]
    fn features_strictly_positive() {
        let data = generate_synthetic(&small(0.05, 11)).unwrap();
        assert!(data
            .series
            .records()
            .iter()
            .all(|r| r.features.iter().all(|&v| v > 0.0)));
    }

    #[test]
    fn rejects_bad_configs() {
        let too_short = SynthConfig {
            length: 99,
            ..SynthConfig::default()
        };
        assert!(matches!(generate_synthetic(&too_short), Err(Error::Config(_))));
        let bad_rate = SynthConfig {
            anomaly_rate: 0.5,
            ..small(0.0, 1)
        };
        assert!(bad_rate.validate().is_err());
        let bad_mix = SynthConfig {
            archetype_mix: ArchetypeMix {
                flash_crash: 0.5,
                ..ArchetypeMix::default()
            },
            ..small(0.01, 1)
        };
        assert!(bad_mix.validate().is_err());
    }

    #[test]
    fn single_archetype_mix() {
        let cfg = SynthConfig {
            archetype_mix: ArchetypeMix {
                liquidity_exhaustion: 0.0,
                spread_spike: 1.0,
                volume_imbalance: 0.0,
                flash_crash: 0.0,
            },
            ..small(0.01, 5)
        };
        let data = generate_synthetic(&cfg).unwrap();
        assert!(!data.episodes.is_empty());
        assert!(data.episodes.iter().all(|e| e.archetype == Archetype::SpreadSpike));
    }
}
