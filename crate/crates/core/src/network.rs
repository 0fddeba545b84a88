//! Received-power maps, UE association, SINR, modified-Shannon capacity,
//! round-robin scheduling, and per-drop aggregates.
//!
//! All transmitters are full-buffer: every macro sector and the SCBS (when
//! present) always transmit, so interference is fixed by placement.

use crate::error::{Error, Result};
use crate::geometry::{bearing_deg, Hotspot, NetworkLayout, Point2D, UePopulation};
use crate::propagation::{
    dbm_to_mw, mw_to_dbm, pathloss_db, pattern_gain_db, rx_power_dbm, thermal_noise_dbm,
    AntennaPattern, MeaConfig, PathlossModel, PatternKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub id: usize,
    pub position: Point2D,
    pub tx_power_dbm: f64,
    pub pattern: AntennaPattern,
    pub pathloss: PathlossModel,
    pub is_scbs: bool,
}

/// Received power in dBm, indexed `(ue, transmitter)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RxPowerMap {
    pub n_ues: usize,
    pub n_tx: usize,
    dbm: Vec<f64>,
}

impl RxPowerMap {
    pub fn entry(&self, ue: usize, tx: usize) -> f64 {
        self.dbm[ue * self.n_tx + tx]
    }

    /// New map with one more transmitter column appended (used to swap MEA
    /// elements without recomputing the macro columns).
    pub fn with_extra_column(&self, column: &[f64]) -> RxPowerMap {
        assert_eq!(column.len(), self.n_ues, "column length mismatch");
        let n_tx = self.n_tx + 1;
        let mut dbm = Vec::with_capacity(self.n_ues * n_tx);
        for ue in 0..self.n_ues {
            dbm.extend_from_slice(&self.dbm[ue * self.n_tx..(ue + 1) * self.n_tx]);
            dbm.push(column[ue]);
        }
        RxPowerMap {
            n_ues: self.n_ues,
            n_tx,
            dbm,
        }
    }
}

/// Per-link received power for one transmitter toward one UE position.
fn link_rx_dbm(tx: &Transmitter, ue: Point2D, ue_rx_gain_db: f64) -> Result<f64> {
    let gain = match tx.pattern.kind {
        PatternKind::Omni => tx.pattern.peak_gain_dbi,
        _ => pattern_gain_db(&tx.pattern, bearing_deg(tx.position, ue)?),
    };
    let pl = pathloss_db(&tx.pathloss, tx.position.distance_to(ue))?;
    Ok(rx_power_dbm(tx.tx_power_dbm, gain, pl) + ue_rx_gain_db)
}

/// Builds the full received-power matrix.
pub fn rx_power_map(ues: &[Point2D], transmitters: &[Transmitter]) -> Result<RxPowerMap> {
    rx_power_map_with_gain(ues, transmitters, 0.0, None)
}

/// [`rx_power_map`] plus a flat UE receive gain and an optional per-link
/// lognormal shadowing field (dB offsets, indexed like the map).
pub fn rx_power_map_with_gain(
    ues: &[Point2D],
    transmitters: &[Transmitter],
    ue_rx_gain_db: f64,
    shadow_db: Option<&[f64]>,
) -> Result<RxPowerMap> {
    if ues.is_empty() || transmitters.is_empty() {
        return Err(Error::invalid(
            "rx_power_map requires at least one UE and one transmitter".to_string(),
        ));
    }
    if let Some(s) = shadow_db {
        if s.len() != ues.len() * transmitters.len() {
            return Err(Error::invalid(format!(
                "shadow field has {} entries, expected {}",
                s.len(),
                ues.len() * transmitters.len()
            )));
        }
    }
    let n_tx = transmitters.len();
    let mut dbm = Vec::with_capacity(ues.len() * n_tx);
    for (u, &ue) in ues.iter().enumerate() {
        for (t, tx) in transmitters.iter().enumerate() {
            let mut v = link_rx_dbm(tx, ue, ue_rx_gain_db)?;
            if let Some(s) = shadow_db {
                v += s[u * n_tx + t];
            }
            dbm.push(v);
        }
    }
    Ok(RxPowerMap {
        n_ues: ues.len(),
        n_tx,
        dbm,
    })
}

/// Server per UE: the SCBS wins only on strictly higher received power than
/// the best macro sector; macro ties go to the lowest transmitter id.
pub fn associate(map: &RxPowerMap, scbs_col: Option<usize>) -> Vec<usize> {
    (0..map.n_ues)
        .map(|ue| {
            let mut best_macro = usize::MAX;
            let mut best_dbm = f64::NEG_INFINITY;
            for t in 0..map.n_tx {
                if Some(t) == scbs_col {
                    continue;
                }
                let v = map.entry(ue, t);
                if v > best_dbm {
                    best_dbm = v;
                    best_macro = t;
                }
            }
            match scbs_col {
                Some(s) if map.entry(ue, s) > best_dbm => s,
                _ => best_macro,
            }
        })
        .collect()
}

/// Number of UEs associated to the SCBS column.
pub fn served_count(map: &RxPowerMap, scbs_col: usize) -> usize {
    associate(map, Some(scbs_col))
        .iter()
        .filter(|&&s| s == scbs_col)
        .count()
}

/// Linear-domain SINR of one UE in dB, with every other transmitter as
/// interference plus thermal noise.
pub fn ue_sinr_db(map: &RxPowerMap, servers: &[usize], ue: usize, noise_dbm: f64) -> f64 {
    let server = servers[ue];
    let signal_mw = dbm_to_mw(map.entry(ue, server));
    let mut interference_mw = 0.0;
    for t in 0..map.n_tx {
        if t != server {
            interference_mw += dbm_to_mw(map.entry(ue, t));
        }
    }
    mw_to_dbm(signal_mw / (interference_mw + dbm_to_mw(noise_dbm)))
}

/// Rate/SINR mapping parameters for the capped, efficiency-scaled Shannon
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShannonParams {
    pub bw_eff: f64,
    pub sinr_eff: f64,
    pub se_cap_bps_per_hz: f64,
}

impl Default for ShannonParams {
    fn default() -> Self {
        ShannonParams {
            bw_eff: 0.56,
            sinr_eff: 2.0,
            se_cap_bps_per_hz: 4.4,
        }
    }
}

/// `min(bw_eff * B * log2(1 + sinr/sinr_eff), B * se_cap)` in bit/s.
pub fn capacity_bps(sinr_db: f64, bandwidth_hz: f64, p: &ShannonParams) -> f64 {
    assert!(bandwidth_hz > 0.0, "bandwidth must be positive");
    let sinr_lin = dbm_to_mw(sinr_db);
    let se = p.bw_eff * (1.0 + sinr_lin / p.sinr_eff).log2();
    bandwidth_hz * se.min(p.se_cap_bps_per_hz)
}

/// Equal-time round robin: each UE gets its capacity divided by the number
/// of UEs attached to the same cell.
pub fn ue_rates(
    servers: &[usize],
    sinrs_db: &[f64],
    bandwidth_hz: f64,
    p: &ShannonParams,
) -> Vec<f64> {
    assert_eq!(servers.len(), sinrs_db.len(), "length mismatch");
    let mut load: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for &s in servers {
        *load.entry(s).or_insert(0) += 1;
    }
    servers
        .iter()
        .zip(sinrs_db)
        .map(|(&s, &sinr)| capacity_bps(sinr, bandwidth_hz, p) / load[&s] as f64)
        .collect()
}

/// Sum of all UE rates in the drop.
pub fn total_throughput(rates_bps: &[f64]) -> f64 {
    rates_bps.iter().sum()
}

/// Receiver/bandwidth assumptions shared by every link in a scene.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub ue_rx_gain_db: f64,
    pub oda_gain_dbi: f64,
    pub shannon: ShannonParams,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            bandwidth_hz: 10e6,
            noise_figure_db: 9.0,
            ue_rx_gain_db: 0.0,
            oda_gain_dbi: 0.0,
            shannon: ShannonParams::default(),
        }
    }
}

impl RadioParams {
    pub fn noise_dbm(&self) -> f64 {
        thermal_noise_dbm(self.bandwidth_hz, self.noise_figure_db)
    }
}

/// Antenna fitted to the SCBS.
#[derive(Debug, Clone, PartialEq)]
pub enum ScbsAntenna {
    /// Omni-directional, gain taken from [`RadioParams::oda_gain_dbi`].
    Oda,
    Mea(MeaConfig),
    Fixed(AntennaPattern),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScbsNode {
    pub position: Point2D,
    pub tx_power_dbm: f64,
    pub pathloss: PathlossModel,
    pub antenna: ScbsAntenna,
}

/// One fully-specified placement: layout, macro sectors, optional SCBS,
/// hotspot, and UE population.
#[derive(Debug, Clone)]
pub struct Scene {
    pub layout: NetworkLayout,
    pub macros: Vec<Transmitter>,
    pub scbs: Option<ScbsNode>,
    pub hotspot: Hotspot,
    pub ues: UePopulation,
    pub radio: RadioParams,
    /// Optional per-link shadowing, indexed `(ue, tx)` with the SCBS as the
    /// last transmitter column.
    pub shadow_db: Option<Vec<f64>>,
}

/// One macro transmitter per sector of the layout.
pub fn macro_transmitters(
    layout: &NetworkLayout,
    tx_power_dbm: f64,
    pattern: AntennaPattern,
    pathloss: PathlossModel,
) -> Vec<Transmitter> {
    layout
        .sectors
        .iter()
        .enumerate()
        .map(|(id, sec)| Transmitter {
            id,
            position: layout.sites[sec.site],
            tx_power_dbm,
            pattern: pattern.with_boresight(sec.boresight_deg),
            pathloss,
            is_scbs: false,
        })
        .collect()
}

/// Per-UE outcome of a drop under one antenna choice.
#[derive(Debug, Clone)]
pub struct DropMetrics {
    pub servers: Vec<usize>,
    pub sinr_db: Vec<f64>,
    pub rates_bps: Vec<f64>,
    pub served_ues: usize,
    pub total_rate_bps: f64,
}

impl Scene {
    pub fn noise_dbm(&self) -> f64 {
        self.radio.noise_dbm()
    }

    /// Pattern the SCBS currently radiates with.
    pub fn active_scbs_pattern(&self) -> Option<AntennaPattern> {
        self.scbs.as_ref().map(|s| match &s.antenna {
            ScbsAntenna::Oda => AntennaPattern::omni(self.radio.oda_gain_dbi),
            ScbsAntenna::Mea(mea) => *mea.active_pattern(),
            ScbsAntenna::Fixed(p) => *p,
        })
    }

    fn scbs_transmitter(&self, pattern: AntennaPattern) -> Option<Transmitter> {
        self.scbs.as_ref().map(|s| Transmitter {
            id: self.macros.len(),
            position: s.position,
            tx_power_dbm: s.tx_power_dbm,
            pattern,
            pathloss: s.pathloss,
            is_scbs: true,
        })
    }

    /// Macro-only received power map for this scene's UE positions.
    pub fn macro_map(&self) -> Result<RxPowerMap> {
        macro_map_for(self, &self.ues.positions, self.shadow_db.as_deref())
    }

    /// Received power from the SCBS with the given pattern, one entry per UE.
    pub fn scbs_column(&self, pattern: AntennaPattern) -> Result<Vec<f64>> {
        scbs_column_for(self, &self.ues.positions, pattern, self.shadow_db.as_deref())
    }

    /// Full map for the active antenna (SCBS last column when present).
    pub fn rx_map(&self) -> Result<RxPowerMap> {
        let macro_map = self.macro_map()?;
        match self.active_scbs_pattern() {
            Some(p) => {
                let col = self.scbs_column(p)?;
                Ok(macro_map.with_extra_column(&col))
            }
            None => Ok(macro_map),
        }
    }

    /// Association, SINR, and round-robin rates under the active antenna.
    pub fn evaluate(&self) -> Result<DropMetrics> {
        let map = self.rx_map()?;
        let scbs_col = self.scbs.as_ref().map(|_| self.macros.len());
        Ok(evaluate_map(&map, scbs_col, self.noise_dbm(), &self.radio))
    }
}

/// Macro-only map for arbitrary UE positions under a scene's radio and
/// shadowing conventions. `shadow_full` is indexed `(ue, tx)` with the SCBS
/// as the last column even when only macro columns are read.
pub fn macro_map_for(
    scene: &Scene,
    positions: &[Point2D],
    shadow_full: Option<&[f64]>,
) -> Result<RxPowerMap> {
    let sliced = shadow_full.map(|s| {
        let full_tx = scene.macros.len() + 1;
        let mut out = Vec::with_capacity(positions.len() * scene.macros.len());
        for ue in 0..positions.len() {
            out.extend_from_slice(&s[ue * full_tx..ue * full_tx + scene.macros.len()]);
        }
        out
    });
    rx_power_map_with_gain(
        positions,
        &scene.macros,
        scene.radio.ue_rx_gain_db,
        sliced.as_deref(),
    )
}

/// SCBS received-power column for arbitrary UE positions.
pub fn scbs_column_for(
    scene: &Scene,
    positions: &[Point2D],
    pattern: AntennaPattern,
    shadow_full: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let tx = scene
        .scbs_transmitter(pattern)
        .ok_or_else(|| Error::invalid("scene has no SCBS".to_string()))?;
    let full_tx = scene.macros.len() + 1;
    positions
        .iter()
        .enumerate()
        .map(|(u, &p)| {
            let mut v = link_rx_dbm(&tx, p, scene.radio.ue_rx_gain_db)?;
            if let Some(s) = shadow_full {
                v += s[u * full_tx + scene.macros.len()];
            }
            Ok(v)
        })
        .collect()
}

/// Metrics from an already-built map.
pub fn evaluate_map(
    map: &RxPowerMap,
    scbs_col: Option<usize>,
    noise_dbm: f64,
    radio: &RadioParams,
) -> DropMetrics {
    let servers = associate(map, scbs_col);
    let sinr_db: Vec<f64> = (0..map.n_ues)
        .map(|u| ue_sinr_db(map, &servers, u, noise_dbm))
        .collect();
    let rates_bps = ue_rates(&servers, &sinr_db, radio.bandwidth_hz, &radio.shannon);
    let served_ues = match scbs_col {
        Some(c) => servers.iter().filter(|&&s| s == c).count(),
        None => 0,
    };
    let total_rate_bps = total_throughput(&rates_bps);
    DropMetrics {
        servers,
        sinr_db,
        rates_bps,
        served_ues,
        total_rate_bps,
    }
}

/// SINR at the hotspot center with the SCBS forced omni-directional and all
/// macro sectors as interference. Characterizes the placement quality.
pub fn gamma_hs(scene: &Scene) -> Result<f64> {
    let scbs = scene
        .scbs
        .as_ref()
        .ok_or_else(|| Error::invalid("gamma_hs requires an SCBS".to_string()))?;
    let oda = AntennaPattern::omni(scene.radio.oda_gain_dbi);
    gamma_at(
        scene.hotspot.center,
        &scene.macros,
        scbs.position,
        scbs.tx_power_dbm,
        &scbs.pathloss,
        &oda,
        scene.radio.ue_rx_gain_db,
        scene.noise_dbm(),
    )
}

/// [`gamma_hs`] for explicit positions (placement rejection uses this
/// before a full scene exists). Shadowing never applies here: the metric is
/// a placement descriptor, not a fading realization.
#[allow(clippy::too_many_arguments)]
pub fn gamma_at(
    point: Point2D,
    macros: &[Transmitter],
    scbs_position: Point2D,
    scbs_tx_power_dbm: f64,
    scbs_pathloss: &PathlossModel,
    oda_pattern: &AntennaPattern,
    ue_rx_gain_db: f64,
    noise_dbm: f64,
) -> Result<f64> {
    let mut interference_mw = 0.0;
    for tx in macros {
        interference_mw += dbm_to_mw(link_rx_dbm(tx, point, ue_rx_gain_db)?);
    }
    let pl = pathloss_db(scbs_pathloss, scbs_position.distance_to(point))?;
    let signal_dbm =
        rx_power_dbm(scbs_tx_power_dbm, oda_pattern.peak_gain_dbi, pl) + ue_rx_gain_db;
    Ok(mw_to_dbm(
        dbm_to_mw(signal_dbm) / (interference_mw + dbm_to_mw(noise_dbm)),
    ))
}

/// Rigid 90-degree rotation of the whole scene about the SCBS, with the
/// active MEA element advanced by one. Physically a relabeling: every link
/// budget is preserved.
pub fn rotate_scene_quarter(scene: &Scene) -> Scene {
    let pivot = scene
        .scbs
        .as_ref()
        .map(|s| s.position)
        .expect("rotation pivot requires an SCBS");
    let rot = |p: Point2D| p.rotated_quarter_turns_about(pivot, 1);
    let mut layout = scene.layout.clone();
    for s in &mut layout.sites {
        *s = rot(*s);
    }
    for sec in &mut layout.sectors {
        sec.boresight_deg = crate::geometry::normalize_deg(sec.boresight_deg + 90.0);
    }
    let macros = scene
        .macros
        .iter()
        .map(|t| Transmitter {
            position: rot(t.position),
            pattern: t.pattern.with_boresight(t.pattern.boresight_deg + 90.0),
            ..t.clone()
        })
        .collect();
    let scbs = scene.scbs.as_ref().map(|s| ScbsNode {
        antenna: match &s.antenna {
            ScbsAntenna::Mea(mea) => {
                ScbsAntenna::Mea(mea.clone().with_active((mea.active_element + 1) % 4))
            }
            other => other.clone(),
        },
        ..s.clone()
    });
    Scene {
        layout,
        macros,
        scbs,
        hotspot: Hotspot {
            center: rot(scene.hotspot.center),
            radius_m: scene.hotspot.radius_m,
        },
        ues: UePopulation {
            positions: scene.ues.positions.iter().map(|&p| rot(p)).collect(),
            hotspot_flags: scene.ues.hotspot_flags.clone(),
        },
        radio: scene.radio,
        shadow_db: scene.shadow_db.clone(),
    }
}
