//! Antenna-element selection: per-element candidate evaluation, the
//! throughput and served-count selection rules, angle-based ground truth,
//! training over resampled UE distributions, and the sequential T-test
//! stopping rule.

use crate::error::{Error, Result};
use crate::geometry::{angular_distance_deg, bearing_deg, UePopulation, UeSampler};
use crate::network::{
    evaluate_map, macro_map_for, scbs_column_for, Scene, ScbsAntenna,
};
use crate::propagation::MeaConfig;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Per-element record from turning one element on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionCandidate {
    pub element_idx: usize,
    pub s_ue: usize,
    pub r_total_bps: f64,
}

fn mea_of(scene: &Scene) -> Result<&MeaConfig> {
    match scene.scbs.as_ref().map(|s| &s.antenna) {
        Some(ScbsAntenna::Mea(m)) => Ok(m),
        _ => Err(Error::invalid(
            "scene does not carry an MEA-equipped SCBS".to_string(),
        )),
    }
}

/// Served-UE count for each of the 4 elements on the given population,
/// sharing one macro map. The association rule alone decides the counts.
pub fn served_counts_per_element(
    scene: &Scene,
    ues: &UePopulation,
    shadow_full: Option<&[f64]>,
) -> Result<[usize; 4]> {
    let mea = mea_of(scene)?;
    let macro_map = macro_map_for(scene, &ues.positions, shadow_full)?;
    let scbs_col_idx = scene.macros.len();
    let mut counts = [0usize; 4];
    for (i, count) in counts.iter_mut().enumerate() {
        let col = scbs_column_for(scene, &ues.positions, mea.elements[i], shadow_full)?;
        let map = macro_map.with_extra_column(&col);
        *count = crate::network::served_count(&map, scbs_col_idx);
    }
    Ok(counts)
}

/// Activates each element in turn and records served UEs and total
/// throughput on the scene's own population.
pub fn evaluate_candidates(scene: &Scene) -> Result<Vec<SelectionCandidate>> {
    let mea = mea_of(scene)?;
    let macro_map = macro_map_for(scene, &scene.ues.positions, scene.shadow_db.as_deref())?;
    let scbs_col_idx = scene.macros.len();
    let noise = scene.noise_dbm();
    (0..4)
        .map(|i| {
            let col = scbs_column_for(
                scene,
                &scene.ues.positions,
                mea.elements[i],
                scene.shadow_db.as_deref(),
            )?;
            let map = macro_map.with_extra_column(&col);
            let metrics = evaluate_map(&map, Some(scbs_col_idx), noise, &scene.radio);
            Ok(SelectionCandidate {
                element_idx: i,
                s_ue: metrics.served_ues,
                r_total_bps: metrics.total_rate_bps,
            })
        })
        .collect()
}

fn argmax_by<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Centralized rule: element with the highest total throughput.
pub fn select_centralized(candidates: &[SelectionCandidate]) -> usize {
    let values: Vec<f64> = candidates.iter().map(|c| c.r_total_bps).collect();
    candidates[argmax_by(&values)].element_idx
}

/// Distributed rule: element serving the most UEs.
pub fn select_distributed(candidates: &[SelectionCandidate]) -> usize {
    let values: Vec<usize> = candidates.iter().map(|c| c.s_ue).collect();
    candidates[argmax_by(&values)].element_idx
}

/// The element whose boresight is angularly closest to the hotspot center
/// direction (ties to the lowest index).
pub fn truth_element_by_angle(scene: &Scene) -> Result<usize> {
    let mea = mea_of(scene)?;
    let scbs_pos = scene.scbs.as_ref().expect("mea_of checked").position;
    let hotspot_bearing = bearing_deg(scbs_pos, scene.hotspot.center)?;
    let dists: Vec<f64> = (0..4)
        .map(|i| angular_distance_deg(mea.element_boresight_deg(i), hotspot_bearing))
        .collect();
    let mut best = 0;
    for i in 1..4 {
        if dists[i] < dists[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Draws one training round's UE population, plus a fresh lognormal shadow
/// field when enabled.
#[derive(Debug, Clone)]
pub struct RoundSampler<'a> {
    pub ue_sampler: UeSampler<'a>,
    pub shadow_sigma_db: f64,
    /// Transmitter count for the shadow field shape (macros + SCBS).
    pub n_tx: usize,
}

impl RoundSampler<'_> {
    pub fn sample(&self, rng: &mut impl Rng) -> Result<(UePopulation, Option<Vec<f64>>)> {
        let ues = self.ue_sampler.sample(rng)?;
        let shadow = (self.shadow_sigma_db > 0.0).then(|| {
            (0..ues.n_ues() * self.n_tx)
                .map(|_| self.shadow_sigma_db * standard_normal(rng))
                .collect()
        });
        Ok((ues, shadow))
    }
}

/// Box-Muller standard normal draw.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Outcome of one majority-rule training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    /// `counts[round][element]`, one row per round.
    pub counts: Vec<[u32; 4]>,
    pub chosen: usize,
    pub truth: usize,
    pub correct: bool,
    pub rounds: usize,
}

/// Per-element mean served counts over `k` rounds with a fresh UE
/// distribution per round; the chosen element is the argmax of the means.
pub fn run_training(
    scene: &Scene,
    sampler: &RoundSampler<'_>,
    k: usize,
    rng: &mut impl Rng,
) -> Result<TrainingRecord> {
    if k < 1 {
        return Err(Error::invalid("training needs at least one round".to_string()));
    }
    let mut counts = Vec::with_capacity(k);
    let mut sums = [0u64; 4];
    for _ in 0..k {
        let (ues, shadow) = sampler.sample(rng)?;
        let row = served_counts_per_element(scene, &ues, shadow.as_deref())?;
        let mut row32 = [0u32; 4];
        for (dst, src) in row32.iter_mut().zip(row) {
            *dst = src as u32;
        }
        for (s, c) in sums.iter_mut().zip(row) {
            *s += c as u64;
        }
        counts.push(row32);
    }
    let chosen = argmax_by(&sums);
    let truth = truth_element_by_angle(scene)?;
    Ok(TrainingRecord {
        counts,
        chosen,
        truth,
        correct: chosen == truth,
        rounds: k,
    })
}

/// Welch's unequal-variance t statistic with Welch-Satterthwaite degrees of
/// freedom. When both samples are degenerate (zero variance) the statistic
/// is `+inf`, `0`, or `-inf` by mean comparison and `df` is NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
}

pub fn welch_t(sample_a: &[f64], sample_b: &[f64]) -> Result<WelchT> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::invalid(format!(
            "welch_t needs at least 2 values per sample, got {} and {}",
            sample_a.len(),
            sample_b.len()
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = |s: &[f64], m: f64| {
        s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (s.len() - 1) as f64
    };
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (var(sample_a, ma), var(sample_b, mb));
    if va == 0.0 && vb == 0.0 {
        let t = match ma.partial_cmp(&mb) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        };
        return Ok(WelchT { t, df: f64::NAN });
    }
    let sa = va / na;
    let sb = vb / nb;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchT { t, df })
}

/// One-sided p-value for `mean_a > mean_b`.
pub fn one_sided_p(w: &WelchT) -> f64 {
    if w.t == f64::INFINITY {
        return 0.0;
    }
    if w.t == f64::NEG_INFINITY {
        return 1.0;
    }
    if w.df.is_nan() {
        // both-degenerate equal means
        return 0.5;
    }
    let dist = StudentsT::new(0.0, 1.0, w.df).expect("df > 0 by construction");
    1.0 - dist.cdf(w.t)
}

/// Which opposing sample the best element is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TtestCompare {
    /// Element with the second-highest running mean.
    RunnerUp,
    /// All other elements' counts pooled into one sample.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestOutcome {
    /// Rounds after which the test first passed, `None` if `max_rounds` was
    /// reached without significance.
    pub rounds_needed: Option<u32>,
    pub final_t: f64,
    pub alpha: f64,
}

/// Adds training rounds until the best element's served counts beat the
/// opposing sample in a one-sided Welch test at level `alpha`.
pub fn rounds_to_significance(
    scene: &Scene,
    sampler: &RoundSampler<'_>,
    alpha: f64,
    max_rounds: u32,
    compare: TtestCompare,
    rng: &mut impl Rng,
) -> Result<TTestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0,1), got {alpha}")));
    }
    if max_rounds < 2 {
        return Err(Error::invalid("max_rounds must be at least 2".to_string()));
    }
    let mut history: [Vec<f64>; 4] = Default::default();
    let mut last_t = f64::NAN;
    for round in 1..=max_rounds {
        let (ues, shadow) = sampler.sample(rng)?;
        let row = served_counts_per_element(scene, &ues, shadow.as_deref())?;
        for (h, c) in history.iter_mut().zip(row) {
            h.push(c as f64);
        }
        if round < 2 {
            continue;
        }
        let means: Vec<f64> = history
            .iter()
            .map(|h| h.iter().sum::<f64>() / h.len() as f64)
            .collect();
        let best = argmax_by(&means);
        let opposing: Vec<f64> = match compare {
            TtestCompare::RunnerUp => {
                let mut runner = if best == 0 { 1 } else { 0 };
                for i in 0..4 {
                    if i != best && means[i] > means[runner] {
                        runner = i;
                    }
                }
                history[runner].clone()
            }
            TtestCompare::Pooled => (0..4)
                .filter(|&i| i != best)
                .flat_map(|i| history[i].iter().copied())
                .collect(),
        };
        let w = welch_t(&history[best], &opposing)?;
        last_t = w.t;
        if one_sided_p(&w) < alpha {
            return Ok(TTestOutcome {
                rounds_needed: Some(round),
                final_t: w.t,
                alpha,
            });
        }
    }
    Ok(TTestOutcome {
        rounds_needed: None,
        final_t: last_t,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, DropArea, Hotspot, Point2D};
    use crate::network::{gamma_at, macro_transmitters, RadioParams, ScbsNode};
    use crate::propagation::{AntennaPattern, PathlossModel, PatternKind};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cand(idx: usize, s: usize, r: f64) -> SelectionCandidate {
        SelectionCandidate {
            element_idx: idx,
            s_ue: s,
            r_total_bps: r,
        }
    }

    #[test]
    fn centralized_picks_max_throughput() {
        let c = vec![
            cand(0, 1, 10e6),
            cand(1, 2, 12e6),
            cand(2, 3, 9e6),
            cand(3, 4, 9e6),
        ];
        assert_eq!(select_centralized(&c), 1);
        let tie = vec![
            cand(0, 1, 9e6),
            cand(1, 2, 9e6),
            cand(2, 3, 9e6),
            cand(3, 4, 9e6),
        ];
        assert_eq!(select_centralized(&tie), 0);
    }

    #[test]
    fn distributed_picks_max_served() {
        let c = vec![
            cand(0, 12, 0.0),
            cand(1, 3, 0.0),
            cand(2, 2, 0.0),
            cand(3, 1, 0.0),
        ];
        assert_eq!(select_distributed(&c), 0);
        let tie = vec![
            cand(0, 5, 0.0),
            cand(1, 5, 0.0),
            cand(2, 2, 0.0),
            cand(3, 1, 0.0),
        ];
        assert_eq!(select_distributed(&tie), 0);
        // shift invariance
        let shifted: Vec<_> = c
            .iter()
            .map(|x| cand(x.element_idx, x.s_ue + 7, x.r_total_bps))
            .collect();
        assert_eq!(select_distributed(&shifted), select_distributed(&c));
    }

    /// Scene with an MEA SCBS placed so that gamma_hs is close to `gamma_db`,
    /// with the hotspot center at `hotspot_bearing_deg` from the SCBS.
    fn mea_scene_at_gamma(
        gamma_db: f64,
        hotspot_bearing_deg: f64,
        install_offset_deg: f64,
    ) -> Scene {
        let layout = build_layout(500.0).unwrap();
        let macro_pattern =
            AntennaPattern::directional(PatternKind::MacroSector, 14.0, 70.0, 25.0, 0.0).unwrap();
        let macros =
            macro_transmitters(&layout, 46.0, macro_pattern, PathlossModel::macro_uma());
        let hotspot_center = Point2D::new(160.0, 95.0);
        let radio = RadioParams::default();
        let small = PathlossModel::smallcell_outdoor();
        let oda = AntennaPattern::omni(radio.oda_gain_dbi);
        // bisect the SCBS distance along the opposite bearing until gamma matches
        let dir = (hotspot_bearing_deg + 180.0).to_radians();
        let place = |d: f64| {
            Point2D::new(
                hotspot_center.x + d * dir.cos(),
                hotspot_center.y + d * dir.sin(),
            )
        };
        let gamma_of = |d: f64| {
            gamma_at(
                hotspot_center,
                &macros,
                place(d),
                20.0,
                &small,
                &oda,
                radio.ue_rx_gain_db,
                radio.noise_dbm(),
            )
            .unwrap()
        };
        let (mut lo, mut hi) = (1.5, 60.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if gamma_of(mid) > gamma_db {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let scbs_pos = place(0.5 * (lo + hi));
        let patch =
            AntennaPattern::directional(PatternKind::Patch, 7.0, 90.0, 15.0, 0.0).unwrap();
        Scene {
            layout,
            macros,
            scbs: Some(ScbsNode {
                position: scbs_pos,
                tx_power_dbm: 20.0,
                pathloss: small,
                antenna: ScbsAntenna::Mea(MeaConfig::new(patch, install_offset_deg)),
            }),
            hotspot: Hotspot::new(hotspot_center, 10.0).unwrap(),
            ues: UePopulation {
                positions: vec![hotspot_center],
                hotspot_flags: vec![true],
            },
            radio,
            shadow_db: None,
        }
    }

    fn round_sampler(scene: &Scene) -> RoundSampler<'_> {
        RoundSampler {
            ue_sampler: UeSampler {
                layout: &scene.layout,
                sector: 0,
                drop_area: DropArea::Sector,
                hotspot: scene.hotspot,
                n_ues: 30,
                n_hotspot: 10,
                min_site_distance_m: 10.0,
                exclusion: Some((scene.scbs.as_ref().unwrap().position, 1.0)),
            },
            shadow_sigma_db: 0.0,
            n_tx: scene.macros.len() + 1,
        }
    }

    #[test]
    fn truth_element_examples() {
        // install offset 0 -> boresights {0, 90, 180, 270}
        let scene = mea_scene_at_gamma(0.0, 100.0, 0.0);
        // hotspot bearing 100 degrees -> element 1
        assert_eq!(truth_element_by_angle(&scene).unwrap(), 1);
        let scene269 = mea_scene_at_gamma(0.0, 269.0, 0.0);
        assert_eq!(truth_element_by_angle(&scene269).unwrap(), 3);
        // exact tie at 45 degrees goes to the lower index
        let scene45 = mea_scene_at_gamma(0.0, 45.0, 0.0);
        assert_eq!(truth_element_by_angle(&scene45).unwrap(), 0);
    }

    #[test]
    fn candidates_cover_all_elements_and_are_idempotent() {
        let scene = mea_scene_at_gamma(0.0, 30.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut scene = scene;
        scene.ues = round_sampler(&scene).ue_sampler.sample(&mut rng).unwrap();
        let c1 = evaluate_candidates(&scene).unwrap();
        let c2 = evaluate_candidates(&scene).unwrap();
        assert_eq!(c1.len(), 4);
        assert_eq!(
            c1.iter().map(|c| c.element_idx).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(c1, c2);
    }

    #[test]
    fn aligned_element_dominates_served_count() {
        // hotspot due east of the SCBS, element 0 at boresight 0
        let scene = mea_scene_at_gamma(2.0, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sampler = round_sampler(&scene);
        let mut wins = 0;
        for _ in 0..50 {
            let (ues, _) = sampler.sample(&mut rng).unwrap();
            let counts = served_counts_per_element(&scene, &ues, None).unwrap();
            if counts[0] > counts[1] && counts[0] > counts[2] && counts[0] > counts[3] {
                wins += 1;
            }
        }
        assert!(wins >= 45, "aligned element won only {wins}/50 rounds");
    }

    #[test]
    fn training_matrix_shape_and_single_round_rule() {
        let scene = mea_scene_at_gamma(0.0, 20.0, 0.0);
        let sampler = round_sampler(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rec = run_training(&scene, &sampler, 7, &mut rng).unwrap();
        assert_eq!(rec.counts.len(), 7);
        assert_eq!(rec.rounds, 7);

        let mut rng1 = ChaCha8Rng::seed_from_u64(32);
        let rec1 = run_training(&scene, &sampler, 1, &mut rng1).unwrap();
        let row = rec1.counts[0];
        let argmax = (0..4).max_by_key(|&i| (row[i], std::cmp::Reverse(i))).unwrap();
        assert_eq!(rec1.chosen, argmax);
    }

    #[test]
    fn training_is_reproducible() {
        let scene = mea_scene_at_gamma(0.0, 20.0, 0.0);
        let sampler = round_sampler(&scene);
        let a = run_training(&scene, &sampler, 5, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = run_training(&scene, &sampler, 5, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_accuracy_near_boresight_exceeds_090() {
        // hotspot bearing 5 degrees off element 0 at gamma ~ 0 dB
        let bearing = 25.0;
        let scene = mea_scene_at_gamma(0.0, bearing, bearing - 5.0);
        assert_eq!(truth_element_by_angle(&scene).unwrap(), 0);
        let sampler = round_sampler(&scene);
        let mut correct = 0;
        for trial in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let rec = run_training(&scene, &sampler, 10, &mut rng).unwrap();
            if rec.correct {
                correct += 1;
            }
        }
        let frac = correct as f64 / 200.0;
        assert!(frac > 0.9, "selection accuracy {frac} at k=10");
    }

    #[test]
    fn welch_t_examples() {
        // zero variance, equal means
        let w = welch_t(&[10.0, 10.0], &[10.0, 10.0]).unwrap();
        assert_eq!(w.t, 0.0);
        assert_relative_eq!(one_sided_p(&w), 0.5);
        // frozen from an independent statistics oracle
        let w2 = welch_t(&[12.0, 11.0, 13.0, 12.0], &[8.0, 9.0, 7.0, 8.0]).unwrap();
        assert_relative_eq!(w2.t, 6.92820323027551, max_relative = 1e-9);
        assert_relative_eq!(w2.df, 6.0, max_relative = 1e-9);
        assert_relative_eq!(
            one_sided_p(&w2),
            0.000223910828026595,
            max_relative = 1e-6
        );
        // zero variance, different means
        let w3 = welch_t(&[9.0, 9.0], &[5.0, 5.0]).unwrap();
        assert_eq!(w3.t, f64::INFINITY);
        assert_eq!(one_sided_p(&w3), 0.0);
        // too-small samples
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn student_t_tail_matches_reference() {
        let w = WelchT { t: 2.0, df: 5.0 };
        assert_relative_eq!(one_sided_p(&w), 0.0509697394149291, max_relative = 1e-9);
        let w2 = WelchT { t: 1.0, df: 2.0 };
        assert_relative_eq!(one_sided_p(&w2), 0.211324865405187, max_relative = 1e-9);
    }

    #[test]
    fn ttest_stops_at_two_rounds_when_separation_is_total() {
        // gamma high enough that the aligned element always captures the
        // whole hotspot while the others capture nothing
        let scene = mea_scene_at_gamma(5.0, 0.0, 0.0);
        let sampler = round_sampler(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = rounds_to_significance(
            &scene,
            &sampler,
            0.05,
            100,
            TtestCompare::RunnerUp,
            &mut rng,
        )
        .unwrap();
        assert!(out.rounds_needed.is_some());
        assert!(out.rounds_needed.unwrap() <= 5);
    }

    #[test]
    fn ttest_monotone_in_alpha_on_same_stream() {
        let scene = mea_scene_at_gamma(0.0, 40.0, 0.0);
        let sampler = round_sampler(&scene);
        for seed in 0..5 {
            let strict = rounds_to_significance(
                &scene,
                &sampler,
                0.05,
                100,
                TtestCompare::RunnerUp,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            let loose = rounds_to_significance(
                &scene,
                &sampler,
                0.5,
                100,
                TtestCompare::RunnerUp,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            let s = strict.rounds_needed.unwrap_or(u32::MAX);
            let l = loose.rounds_needed.unwrap_or(u32::MAX);
            assert!(s >= l, "alpha 0.05 stopped before alpha 0.5 (seed {seed})");
        }
    }

    #[test]
    fn ttest_rejects_bad_arguments() {
        let scene = mea_scene_at_gamma(0.0, 40.0, 0.0);
        let sampler = round_sampler(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(rounds_to_significance(
            &scene,
            &sampler,
            0.0,
            100,
            TtestCompare::RunnerUp,
            &mut rng
        )
        .is_err());
        assert!(rounds_to_significance(
            &scene,
            &sampler,
            0.05,
            1,
            TtestCompare::RunnerUp,
            &mut rng
        )
        .is_err());
    }
}
