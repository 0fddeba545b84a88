//! Hexagonal multi-cell layout, random placement, and angular utilities.
//!
//! The layout is the classic 7-site grid: a central site surrounded by one
//! ring of 6 sites at the inter-site distance, each site split into three
//! 120-degree sectors. All placement helpers work in a flat 2D frame with
//! distances in meters and angles in degrees counter-clockwise from +x.

use crate::error::{Error, Result};
use rand::Rng;

/// Rejection-sampling retry budget for a single point.
pub const SECTOR_SAMPLE_BUDGET: u32 = 10_000;

/// Default keep-out radius around every macro site, in meters.
pub const DEFAULT_MIN_SITE_DISTANCE_M: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn distance_to(&self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rotate counter-clockwise about `center` by `deg`.
    pub fn rotated_about(&self, center: Point2D, deg: f64) -> Point2D {
        let (s, c) = deg.to_radians().sin_cos();
        let dx = self.x - center.x;
        let dy = self.y - center.y;
        Point2D::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
    }

    /// Exact counter-clockwise quarter turns about `center` (no trig round-off).
    pub fn rotated_quarter_turns_about(&self, center: Point2D, quarter_turns: u32) -> Point2D {
        let mut dx = self.x - center.x;
        let mut dy = self.y - center.y;
        for _ in 0..(quarter_turns % 4) {
            let (nx, ny) = (-dy, dx);
            dx = nx;
            dy = ny;
        }
        Point2D::new(center.x + dx, center.y + dy)
    }
}

/// One 120-degree sector of a site.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Sector {
    pub site: usize,
    pub boresight_deg: f64,
}

/// Central site plus one ring of 6, tri-sectorized.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NetworkLayout {
    pub isd_m: f64,
    pub sites: Vec<Point2D>,
    pub sectors: Vec<Sector>,
}

/// Per-site sector boresights before any configured offset.
const BASE_BORESIGHTS_DEG: [f64; 3] = [30.0, 150.0, 270.0];

/// Builds the 7-site / 21-sector layout with the default boresights.
pub fn build_layout(isd_m: f64) -> Result<NetworkLayout> {
    build_layout_with_offset(isd_m, 0.0)
}

/// Same as [`build_layout`] with all sector boresights rotated by `offset_deg`.
pub fn build_layout_with_offset(isd_m: f64, offset_deg: f64) -> Result<NetworkLayout> {
    if !(isd_m > 0.0) || !isd_m.is_finite() {
        return Err(Error::invalid(format!(
            "inter-site distance must be positive and finite, got {isd_m}"
        )));
    }
    let mut sites = vec![Point2D::new(0.0, 0.0)];
    for k in 0..6 {
        let ang = (60.0 * k as f64).to_radians();
        sites.push(Point2D::new(isd_m * ang.cos(), isd_m * ang.sin()));
    }
    let sectors = (0..sites.len())
        .flat_map(|site| {
            BASE_BORESIGHTS_DEG.iter().map(move |b| Sector {
                site,
                boresight_deg: normalize_deg(b + offset_deg),
            })
        })
        .collect();
    Ok(NetworkLayout {
        isd_m,
        sites,
        sectors,
    })
}

impl NetworkLayout {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    /// Hexagonal cell membership for a site. The hexagon has inradius
    /// `isd/2` with edges facing the 6 ring directions.
    pub fn in_hex_cell(&self, site: usize, p: Point2D) -> bool {
        let s = self.sites[site];
        let dx = p.x - s.x;
        let dy = p.y - s.y;
        let half = self.isd_m / 2.0 + 1e-9;
        (0..6).all(|k| {
            let ang = (60.0 * k as f64).to_radians();
            dx * ang.cos() + dy * ang.sin() <= half
        })
    }

    /// Whether `p` lies in the 120-degree wedge of `sector` (half-open:
    /// bearing offset from the boresight in `(-60, 60]`).
    pub fn in_sector_wedge(&self, sector: usize, p: Point2D) -> bool {
        let sec = self.sectors[sector];
        let site = self.sites[sec.site];
        if site.distance_to(p) == 0.0 {
            return false;
        }
        let bearing = bearing_deg(site, p).expect("non-coincident");
        let delta = signed_delta_deg(bearing, sec.boresight_deg);
        delta > -60.0 && delta <= 60.0
    }
}

/// Circular demand-hotspot region.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Hotspot {
    pub center: Point2D,
    pub radius_m: f64,
}

impl Hotspot {
    pub fn new(center: Point2D, radius_m: f64) -> Result<Self> {
        if !(radius_m > 0.0) {
            return Err(Error::invalid(format!(
                "hotspot radius must be positive, got {radius_m}"
            )));
        }
        Ok(Hotspot { center, radius_m })
    }
}

/// A dropped UE population; `hotspot_flags[i]` is true when UE `i` was
/// placed inside the hotspot disk.
#[derive(Debug, Clone, PartialEq)]
pub struct UePopulation {
    pub positions: Vec<Point2D>,
    pub hotspot_flags: Vec<bool>,
}

impl UePopulation {
    pub fn n_ues(&self) -> usize {
        self.positions.len()
    }

    pub fn n_hotspot(&self) -> usize {
        self.hotspot_flags.iter().filter(|&&f| f).count()
    }
}

/// Normalize an angle to `[0, 360)` degrees.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r == 360.0 {
        0.0
    } else {
        r
    }
}

/// Signed circular difference `a - b` mapped to `(-180, 180]` degrees.
pub fn signed_delta_deg(a: f64, b: f64) -> f64 {
    let d = normalize_deg(a - b);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Minimal absolute circular difference, in `[0, 180]` degrees.
pub fn angular_distance_deg(a: f64, b: f64) -> f64 {
    signed_delta_deg(a, b).abs()
}

/// Counter-clockwise bearing from `from` to `to`, in `[0, 360)` degrees.
pub fn bearing_deg(from: Point2D, to: Point2D) -> Result<f64> {
    if from == to {
        return Err(Error::invalid(
            "bearing undefined for coincident points".to_string(),
        ));
    }
    Ok(normalize_deg(
        (to.y - from.y).atan2(to.x - from.x).to_degrees(),
    ))
}

/// Uniform sample over a disk (uniform in area, not radius).
pub fn sample_point_in_disk(center: Point2D, radius_m: f64, rng: &mut impl Rng) -> Point2D {
    assert!(radius_m > 0.0, "disk radius must be positive");
    let r = radius_m * rng.random_range(0.0..1.0_f64).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Point2D::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Uniform sample over a sector wedge clipped to the site's hexagonal
/// cell, at least [`DEFAULT_MIN_SITE_DISTANCE_M`] from the site.
pub fn sample_point_in_sector(
    layout: &NetworkLayout,
    sector: usize,
    rng: &mut impl Rng,
) -> Result<Point2D> {
    sample_point_in_sector_min_dist(layout, sector, DEFAULT_MIN_SITE_DISTANCE_M, rng)
}

/// [`sample_point_in_sector`] with an explicit site keep-out radius.
pub fn sample_point_in_sector_min_dist(
    layout: &NetworkLayout,
    sector: usize,
    min_site_distance_m: f64,
    rng: &mut impl Rng,
) -> Result<Point2D> {
    if sector >= layout.sectors.len() {
        return Err(Error::invalid(format!(
            "sector index {sector} out of range (have {})",
            layout.sectors.len()
        )));
    }
    let site = layout.sites[layout.sectors[sector].site];
    let bound = layout.isd_m / 3.0_f64.sqrt(); // hexagon circumradius
    for _ in 0..SECTOR_SAMPLE_BUDGET {
        let p = sample_point_in_disk(site, bound, rng);
        if site.distance_to(p) < min_site_distance_m {
            continue;
        }
        if !layout.in_hex_cell(layout.sectors[sector].site, p) {
            continue;
        }
        if !layout.in_sector_wedge(sector, p) {
            continue;
        }
        return Ok(p);
    }
    Err(Error::SamplingFailure {
        budget: SECTOR_SAMPLE_BUDGET,
        context: format!("sector {sector}, min site distance {min_site_distance_m} m"),
    })
}

/// Uniform sample over a site's whole hexagonal cell.
pub fn sample_point_in_site(
    layout: &NetworkLayout,
    site: usize,
    min_site_distance_m: f64,
    rng: &mut impl Rng,
) -> Result<Point2D> {
    let center = layout.sites[site];
    let bound = layout.isd_m / 3.0_f64.sqrt();
    for _ in 0..SECTOR_SAMPLE_BUDGET {
        let p = sample_point_in_disk(center, bound, rng);
        if center.distance_to(p) < min_site_distance_m {
            continue;
        }
        if layout.in_hex_cell(site, p) {
            return Ok(p);
        }
    }
    Err(Error::SamplingFailure {
        budget: SECTOR_SAMPLE_BUDGET,
        context: format!("site {site}, min site distance {min_site_distance_m} m"),
    })
}

/// Where the non-hotspot share of the population is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DropArea {
    /// The selected 120-degree sector only.
    Sector,
    /// The whole hexagonal cell of the central site.
    Site,
}

/// Repeats a UE drop for a fixed hotspot / SCBS placement.
#[derive(Debug, Clone)]
pub struct UeSampler<'a> {
    pub layout: &'a NetworkLayout,
    pub sector: usize,
    pub drop_area: DropArea,
    pub hotspot: Hotspot,
    pub n_ues: usize,
    pub n_hotspot: usize,
    pub min_site_distance_m: f64,
    /// Keep-out disk around the SCBS (center, radius).
    pub exclusion: Option<(Point2D, f64)>,
}

impl UeSampler<'_> {
    fn clears(&self, p: Point2D) -> bool {
        if let Some((c, r)) = self.exclusion {
            if c.distance_to(p) < r {
                return false;
            }
        }
        true
    }

    /// Draws a fresh population: `n_ues - n_hotspot` uniform over the drop
    /// area, then `n_hotspot` uniform over the hotspot disk.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<UePopulation> {
        let n_uniform = self.n_ues - self.n_hotspot;
        let mut positions = Vec::with_capacity(self.n_ues);
        let mut flags = Vec::with_capacity(self.n_ues);
        for _ in 0..n_uniform {
            let p = self.sample_uniform(rng)?;
            positions.push(p);
            flags.push(false);
        }
        for _ in 0..self.n_hotspot {
            let p = self.sample_in_hotspot(rng)?;
            positions.push(p);
            flags.push(true);
        }
        Ok(UePopulation {
            positions,
            hotspot_flags: flags,
        })
    }

    fn sample_uniform(&self, rng: &mut impl Rng) -> Result<Point2D> {
        for _ in 0..SECTOR_SAMPLE_BUDGET {
            let p = match self.drop_area {
                DropArea::Sector => sample_point_in_sector_min_dist(
                    self.layout,
                    self.sector,
                    self.min_site_distance_m,
                    rng,
                )?,
                DropArea::Site => {
                    let site = self.layout.sectors[self.sector].site;
                    sample_point_in_site(self.layout, site, self.min_site_distance_m, rng)?
                }
            };
            if self.clears(p) {
                return Ok(p);
            }
        }
        Err(Error::SamplingFailure {
            budget: SECTOR_SAMPLE_BUDGET,
            context: "uniform UE outside the SCBS keep-out".to_string(),
        })
    }

    fn sample_in_hotspot(&self, rng: &mut impl Rng) -> Result<Point2D> {
        for _ in 0..SECTOR_SAMPLE_BUDGET {
            let p = sample_point_in_disk(self.hotspot.center, self.hotspot.radius_m, rng);
            let clear_of_sites = self
                .layout
                .sites
                .iter()
                .all(|&s| s.distance_to(p) >= self.min_site_distance_m);
            if clear_of_sites && self.clears(p) {
                return Ok(p);
            }
        }
        Err(Error::SamplingFailure {
            budget: SECTOR_SAMPLE_BUDGET,
            context: "hotspot UE clear of keep-outs".to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn layout_counts_and_ring() {
        let l = build_layout(500.0).unwrap();
        assert_eq!(l.n_sites(), 7);
        assert_eq!(l.n_sectors(), 21);
        // ring site k=0 at (isd, 0)
        assert!((l.sites[1].x - 500.0).abs() < 1e-9);
        assert!(l.sites[1].y.abs() < 1e-9);
        let origin = Point2D::new(0.0, 0.0);
        for s in &l.sites[1..] {
            assert!((s.distance_to(origin) - 500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn layout_rejects_bad_isd() {
        assert!(build_layout(0.0).is_err());
        assert!(build_layout(-1.0).is_err());
        assert!(build_layout(f64::NAN).is_err());
    }

    #[test]
    fn layout_sixfold_symmetry() {
        let l = build_layout(500.0).unwrap();
        let origin = Point2D::new(0.0, 0.0);
        for s in &l.sites {
            let r = s.rotated_about(origin, 60.0);
            let matched = l
                .sites
                .iter()
                .any(|t| t.distance_to(r) < 1e-6);
            assert!(matched, "rotated site {r:?} not in site set");
        }
    }

    #[test]
    fn sector_samples_stay_in_wedge() {
        let l = build_layout(500.0).unwrap();
        let mut r = rng(7);
        let site = Point2D::new(0.0, 0.0);
        for _ in 0..2000 {
            let p = sample_point_in_sector(&l, 0, &mut r).unwrap();
            assert!(l.in_sector_wedge(0, p));
            assert!(l.in_hex_cell(0, p));
            assert!(site.distance_to(p) >= DEFAULT_MIN_SITE_DISTANCE_M);
            let b = bearing_deg(site, p).unwrap();
            let d = signed_delta_deg(b, 30.0);
            assert!(d > -60.0 - 1e-9 && d <= 60.0 + 1e-9);
        }
    }

    #[test]
    fn sector_sample_mean_bearing_near_boresight() {
        let l = build_layout(500.0).unwrap();
        let mut r = rng(11);
        let site = Point2D::new(0.0, 0.0);
        let mut sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let p = sample_point_in_sector(&l, 0, &mut r).unwrap();
            sum += signed_delta_deg(bearing_deg(site, p).unwrap(), 30.0);
        }
        let mean_offset = sum / n as f64;
        assert!(
            mean_offset.abs() < 5.0,
            "mean bearing offset {mean_offset} exceeds 5 degrees"
        );
    }

    #[test]
    fn disk_samples_inside_and_area_uniform() {
        let c = Point2D::new(3.0, -2.0);
        let mut r = rng(13);
        let n = 10_000;
        let mut inner = 0usize;
        for _ in 0..n {
            let p = sample_point_in_disk(c, 10.0, &mut r);
            let d = c.distance_to(p);
            assert!(d <= 10.0 + 1e-12);
            if d <= 5.0 {
                inner += 1;
            }
        }
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.02, "inner fraction {frac}");
    }

    #[test]
    fn disk_degenerate_radius_stays_at_center() {
        let c = Point2D::new(1.0, 1.0);
        let mut r = rng(17);
        let p = sample_point_in_disk(c, 0.001, &mut r);
        assert!(c.distance_to(p) <= 0.001);
    }

    #[test]
    fn bearing_examples() {
        let o = Point2D::new(0.0, 0.0);
        assert_eq!(bearing_deg(o, Point2D::new(1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(bearing_deg(o, Point2D::new(0.0, 5.0)).unwrap(), 90.0);
        assert_eq!(
            bearing_deg(Point2D::new(1.0, 1.0), o).unwrap(),
            225.0
        );
        assert!(bearing_deg(o, o).is_err());
    }

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance_deg(350.0, 10.0), 20.0);
        assert_eq!(angular_distance_deg(90.0, 90.0), 0.0);
        assert_eq!(angular_distance_deg(0.0, 180.0), 180.0);
    }

    #[test]
    fn ue_sampler_counts_and_flags() {
        let l = build_layout(500.0).unwrap();
        let hotspot = Hotspot::new(Point2D::new(150.0, 90.0), 10.0).unwrap();
        let sampler = UeSampler {
            layout: &l,
            sector: 0,
            drop_area: DropArea::Sector,
            hotspot,
            n_ues: 30,
            n_hotspot: 10,
            min_site_distance_m: 10.0,
            exclusion: Some((Point2D::new(148.0, 88.0), 1.0)),
        };
        let pop = sampler.sample(&mut rng(23)).unwrap();
        assert_eq!(pop.n_ues(), 30);
        assert_eq!(pop.n_hotspot(), 10);
        for (p, flagged) in pop.positions.iter().zip(&pop.hotspot_flags) {
            if *flagged {
                assert!(hotspot.center.distance_to(*p) <= hotspot.radius_m + 1e-12);
            }
            assert!(Point2D::new(148.0, 88.0).distance_to(*p) >= 1.0);
        }
    }

    #[test]
    fn quarter_turn_rotation_is_exact() {
        let c = Point2D::new(10.0, -4.0);
        let p = Point2D::new(13.0, -1.0);
        let q = p.rotated_quarter_turns_about(c, 1);
        assert_eq!(q, Point2D::new(7.0, -1.0));
        let back = q.rotated_quarter_turns_about(c, 3);
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn angular_distance_symmetric_and_bounded(a in -720.0..720.0f64, b in -720.0..720.0f64) {
            let d1 = angular_distance_deg(a, b);
            let d2 = angular_distance_deg(b, a);
            prop_assert!((d1 - d2).abs() < 1e-9);
            prop_assert!((0.0..=180.0).contains(&d1));
        }
    }
}
