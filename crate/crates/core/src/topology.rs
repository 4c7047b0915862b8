//! Ion-trap chip geometry: zone packing inside the tweezer-lens field of
//! view, ion coordinates, and distance queries for the transport planner.
//!
//! Zones are horizontal linear ion chains placed on a square grid of pitch
//! `zone_pitch`. The grid may sit on integer multiples of the pitch or be
//! shifted by half a pitch per axis; the packer tries all four alignments
//! and keeps the one that fits the most zones (first in a fixed order on
//! ties), so the result is deterministic and reflection-symmetric. A zone is
//! included iff its whole chain segment, padded by an edge margin, lies
//! inside the field-of-view disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default margin between a chain end and the field-of-view edge, m.
pub const DEFAULT_EDGE_MARGIN: f64 = 10e-6;

/// Vertical offset of each zone's messenger parking spot below its chain, m.
pub const IDLE_OFFSET: f64 = 50e-6;

/// One linear ion chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub num_ions: usize,
    /// Ion-to-ion spacing, m.
    pub ion_spacing: f64,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            num_ions: 30,
            ion_spacing: 5e-6,
        }
    }
}

impl ChainSpec {
    /// End-to-end chain length, m.
    pub fn extent(&self) -> f64 {
        (self.num_ions.saturating_sub(1)) as f64 * self.ion_spacing
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ions < 1 {
            return Err(Error::argument("num_ions must be >= 1"));
        }
        if self.num_ions > 100_000 {
            return Err(Error::argument("num_ions must be <= 100000"));
        }
        if !(self.ion_spacing > 0.0) || !self.ion_spacing.is_finite() {
            return Err(Error::argument("ion_spacing must be > 0"));
        }
        Ok(())
    }
}

/// One trapping zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: usize,
    pub center: (f64, f64),
    pub chain: ChainSpec,
    pub ion_positions: Vec<(f64, f64)>,
}

/// The packed chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipLayout {
    pub fov_diameter: f64,
    pub zone_pitch: f64,
    pub zones: Vec<Zone>,
    /// Messenger parking spots, one per zone.
    pub idle_positions: Vec<(f64, f64)>,
}

/// A point on the chip a messenger can travel to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Ion { zone: usize, ion: usize },
    Idle { idle: usize },
}

/// Pack zones into the field of view with the default edge margin.
pub fn pack_zones(fov_diameter: f64, zone_pitch: f64, chain: ChainSpec) -> Result<ChipLayout> {
    pack_zones_with_margin(fov_diameter, zone_pitch, chain, DEFAULT_EDGE_MARGIN)
}

/// The four grid alignments the packer considers, as per-axis offsets in
/// units of the pitch.
pub const GRID_ALIGNMENTS: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)];

/// Pack zones with an explicit edge margin.
pub fn pack_zones_with_margin(
    fov_diameter: f64,
    zone_pitch: f64,
    chain: ChainSpec,
    edge_margin: f64,
) -> Result<ChipLayout> {
    chain.validate()?;
    if !(fov_diameter > 0.0) || !fov_diameter.is_finite() {
        return Err(Error::argument("fov_diameter must be > 0"));
    }
    if !(zone_pitch > 0.0) || !zone_pitch.is_finite() {
        return Err(Error::argument("zone_pitch must be > 0"));
    }
    if !(edge_margin >= 0.0) || !edge_margin.is_finite() {
        return Err(Error::argument("edge_margin must be >= 0"));
    }
    if chain.extent() >= fov_diameter {
        return Err(Error::argument(format!(
            "chain extent {:.1} um does not fit the {:.1} um field of view",
            chain.extent() * 1e6,
            fov_diameter * 1e6
        )));
    }
    if fov_diameter / zone_pitch > 512.0 {
        return Err(Error::argument(
            "zone_pitch is implausibly small for the field of view",
        ));
    }

    let radius = fov_diameter / 2.0 - edge_margin;
    let half_extent = chain.extent() / 2.0;
    let reach = (fov_diameter / zone_pitch).ceil() as i64 + 2;

    let mut best: Option<Vec<(f64, f64)>> = None;
    for (ox, oy) in GRID_ALIGNMENTS {
        let mut centers = Vec::new();
        for k in -reach..=reach {
            for j in -reach..=reach {
                let xc = (j as f64 + ox) * zone_pitch;
                let y = (k as f64 + oy) * zone_pitch;
                let left = ((xc - half_extent).powi(2) + y * y).sqrt();
                let right = ((xc + half_extent).powi(2) + y * y).sqrt();
                if left <= radius && right <= radius {
                    centers.push((xc, y));
                }
            }
        }
        if best.as_ref().map_or(true, |b| centers.len() > b.len()) {
            best = Some(centers);
        }
    }
    let mut centers = best.unwrap_or_default();
    if centers.len().saturating_mul(chain.num_ions) > 10_000_000 {
        return Err(Error::argument(
            "layout would exceed 10^7 ion positions",
        ));
    }
    centers.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap());

    let zones: Vec<Zone> = centers
        .into_iter()
        .enumerate()
        .map(|(id, (xc, y))| {
            let ion_positions = (0..chain.num_ions)
                .map(|i| (xc - half_extent + i as f64 * chain.ion_spacing, y))
                .collect();
            Zone {
                id,
                center: (xc, y),
                chain,
                ion_positions,
            }
        })
        .collect();
    let idle_positions = zones
        .iter()
        .map(|z| {
            let (x, y) = z.ion_positions[0];
            (x, y - IDLE_OFFSET)
        })
        .collect();

    Ok(ChipLayout {
        fov_diameter,
        zone_pitch,
        zones,
        idle_positions,
    })
}

impl ChipLayout {
    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn total_qubits(&self) -> usize {
        self.zones.iter().map(|z| z.chain.num_ions).sum()
    }

    /// Coordinates of an endpoint.
    pub fn position(&self, endpoint: Endpoint) -> Result<(f64, f64)> {
        match endpoint {
            Endpoint::Ion { zone, ion } => {
                let z = self
                    .zones
                    .iter()
                    .find(|z| z.id == zone)
                    .ok_or_else(|| Error::argument(format!("unknown zone id {zone}")))?;
                z.ion_positions
                    .get(ion)
                    .copied()
                    .ok_or_else(|| Error::argument(format!("zone {zone} has no ion {ion}")))
            }
            Endpoint::Idle { idle } => self
                .idle_positions
                .get(idle)
                .copied()
                .ok_or_else(|| Error::argument(format!("unknown idle position {idle}"))),
        }
    }

    /// Euclidean distance between two endpoints.
    pub fn distance(&self, from: Endpoint, to: Endpoint) -> Result<f64> {
        let (x0, y0) = self.position(from)?;
        let (x1, y1) = self.position(to)?;
        Ok(((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt())
    }

    /// The designated communication ions of a zone: (leftmost, rightmost)
    /// indices with their coordinates.
    pub fn edge_ions(&self, zone: usize) -> Result<((usize, (f64, f64)), (usize, (f64, f64)))> {
        let z = self
            .zones
            .iter()
            .find(|z| z.id == zone)
            .ok_or_else(|| Error::argument(format!("unknown zone id {zone}")))?;
        let last = z.chain.num_ions - 1;
        Ok(((0, z.ion_positions[0]), (last, z.ion_positions[last])))
    }

    /// Validate an imported layout against the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_diameter > 0.0) || !self.fov_diameter.is_finite() {
            return Err(Error::config("fov_diameter must be > 0"));
        }
        if !(self.zone_pitch > 0.0) || !self.zone_pitch.is_finite() {
            return Err(Error::config("zone_pitch must be > 0"));
        }
        let radius = self.fov_diameter / 2.0;
        let mut seen = std::collections::BTreeSet::new();
        for z in &self.zones {
            if !seen.insert(z.id) {
                return Err(Error::config(format!("duplicate zone id {}", z.id)));
            }
            z.chain.validate()?;
            if z.ion_positions.len() != z.chain.num_ions {
                return Err(Error::config(format!(
                    "zone {}: {} ion positions for a {}-ion chain",
                    z.id,
                    z.ion_positions.len(),
                    z.chain.num_ions
                )));
            }
            for &(x, y) in &z.ion_positions {
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::config(format!("zone {}: non-finite ion position", z.id)));
                }
                if (x * x + y * y).sqrt() > radius * (1.0 + 1e-12) {
                    return Err(Error::config(format!(
                        "zone {}: ion at ({x:.2e}, {y:.2e}) lies outside the field of view",
                        z.id
                    )));
                }
            }
        }
        for &(x, y) in &self.idle_positions {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::config("non-finite idle position"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate a layout document.
    pub fn from_json(json: &str) -> Result<Self> {
        let layout: ChipLayout = serde_json::from_str(json)?;
        layout.validate()?;
        Ok(layout)
    }

    /// CSV of all ion coordinates: `zone,ion,x,y`.
    pub fn ion_csv(&self) -> String {
        let mut out = String::from("zone,ion,x,y\n");
        for z in &self.zones {
            for (i, (x, y)) in z.ion_positions.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", z.id, i, x, y));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn defaults() -> ChipLayout {
        pack_zones(1.2e-3, 250e-6, ChainSpec::default()).unwrap()
    }

    // Brute-force reference packer: identical inclusion rule, separate code
    // path, no tie-break shortcuts.
    fn oracle_count(fov: f64, pitch: f64, chain: ChainSpec, margin: f64) -> usize {
        let radius = fov / 2.0 - margin;
        let half = chain.extent() / 2.0;
        let mut best = 0usize;
        for (ox, oy) in GRID_ALIGNMENTS {
            let mut count = 0usize;
            let reach = (fov / pitch).ceil() as i64 + 4;
            for j in -reach..=reach {
                for k in -reach..=reach {
                    let xc = (j as f64 + ox) * pitch;
                    let y = (k as f64 + oy) * pitch;
                    let worst_x = xc.abs() + half;
                    if (worst_x * worst_x + y * y).sqrt() <= radius {
                        count += 1;
                    }
                }
            }
            best = best.max(count);
        }
        best
    }

    #[test]
    fn default_packing_matches_the_oracle() {
        let layout = defaults();
        let expected = oracle_count(1.2e-3, 250e-6, ChainSpec::default(), DEFAULT_EDGE_MARGIN);
        assert_eq!(layout.zone_count(), expected);
        assert_eq!(layout.zone_count(), 16);
        assert_eq!(layout.total_qubits(), 480);
        assert!((16..=20).contains(&layout.zone_count()));
        assert!((480..=600).contains(&layout.total_qubits()));
    }

    #[test]
    fn small_fov_fits_exactly_one_zone() {
        let layout = pack_zones(0.3e-3, 250e-6, ChainSpec::default()).unwrap();
        assert_eq!(layout.zone_count(), 1);
        assert_eq!(layout.zones[0].center, (0.0, 0.0));
        assert_eq!(
            oracle_count(0.3e-3, 250e-6, ChainSpec::default(), DEFAULT_EDGE_MARGIN),
            1
        );
    }

    #[test]
    fn single_ion_chains_count_lattice_points() {
        let chain = ChainSpec {
            num_ions: 1,
            ion_spacing: 5e-6,
        };
        let layout = pack_zones(1.2e-3, 250e-6, chain).unwrap();
        // 250 um lattice points inside a 590 um disk
        assert_eq!(layout.zone_count(), 21);
        assert_eq!(
            layout.zone_count(),
            oracle_count(1.2e-3, 250e-6, chain, DEFAULT_EDGE_MARGIN)
        );
    }

    #[test]
    fn oversized_chain_is_rejected() {
        let chain = ChainSpec {
            num_ions: 300,
            ion_spacing: 5e-6,
        };
        assert!(pack_zones(1.2e-3, 250e-6, chain).is_err());
    }

    #[test]
    fn all_ions_inside_the_fov() {
        let layout = defaults();
        let radius = layout.fov_diameter / 2.0;
        for z in &layout.zones {
            for &(x, y) in &z.ion_positions {
                assert!((x * x + y * y).sqrt() <= radius);
            }
        }
        layout.validate().unwrap();
    }

    #[test]
    fn layout_is_reflection_symmetric() {
        let layout = defaults();
        let centers: std::collections::BTreeSet<(i64, i64)> = layout
            .zones
            .iter()
            .map(|z| ((z.center.0 * 1e9).round() as i64, (z.center.1 * 1e9).round() as i64))
            .collect();
        for &(x, y) in &centers {
            assert!(centers.contains(&(-x, y)));
            assert!(centers.contains(&(x, -y)));
        }
    }

    #[test]
    fn distance_examples() {
        let layout = defaults();
        // same ion to itself
        let e = Endpoint::Ion { zone: 0, ion: 3 };
        assert_eq!(layout.distance(e, e).unwrap(), 0.0);

        // adjacent zones in one row: rightmost of A to leftmost of B is
        // pitch - extent = 250 - 145 = 105 um
        let (a, b) = adjacent_in_row(&layout);
        let d = layout
            .distance(
                Endpoint::Ion { zone: a, ion: 29 },
                Endpoint::Ion { zone: b, ion: 0 },
            )
            .unwrap();
        assert_relative_eq!(d, 105e-6, max_relative = 1e-9);

        // adjacent rows, same column, same ion index: one pitch
        let (a, b) = adjacent_in_column(&layout);
        let d = layout
            .distance(
                Endpoint::Ion { zone: a, ion: 7 },
                Endpoint::Ion { zone: b, ion: 7 },
            )
            .unwrap();
        assert_relative_eq!(d, 250e-6, max_relative = 1e-9);

        assert!(layout
            .distance(Endpoint::Ion { zone: 99, ion: 0 }, e)
            .is_err());
        assert!(layout
            .distance(Endpoint::Idle { idle: 99 }, e)
            .is_err());
    }

    fn adjacent_in_row(layout: &ChipLayout) -> (usize, usize) {
        for a in &layout.zones {
            for b in &layout.zones {
                if (a.center.1 - b.center.1).abs() < 1e-12
                    && (b.center.0 - a.center.0 - layout.zone_pitch).abs() < 1e-9
                {
                    return (a.id, b.id);
                }
            }
        }
        panic!("no adjacent same-row zones in layout");
    }

    fn adjacent_in_column(layout: &ChipLayout) -> (usize, usize) {
        for a in &layout.zones {
            for b in &layout.zones {
                if (a.center.0 - b.center.0).abs() < 1e-12
                    && (b.center.1 - a.center.1 - layout.zone_pitch).abs() < 1e-9
                {
                    return (a.id, b.id);
                }
            }
        }
        panic!("no adjacent same-column zones in layout");
    }

    #[test]
    fn edge_ions_are_the_chain_ends() {
        let layout = defaults();
        let ((l, lp), (r, rp)) = layout.edge_ions(0).unwrap();
        assert_eq!((l, r), (0, 29));
        assert_relative_eq!(rp.0 - lp.0, 145e-6, max_relative = 1e-9);

        let one = pack_zones(
            0.3e-3,
            250e-6,
            ChainSpec {
                num_ions: 1,
                ion_spacing: 5e-6,
            },
        )
        .unwrap();
        let ((l, _), (r, _)) = one.edge_ions(0).unwrap();
        assert_eq!((l, r), (0, 0));

        assert!(layout.edge_ions(99).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let layout = defaults();
        let json = layout.to_json().unwrap();
        let back = ChipLayout::from_json(&json).unwrap();
        assert_eq!(layout, back);

        let mut broken = layout.clone();
        broken.zones[0].ion_positions[0] = (1.0, 1.0); // far outside the FOV
        assert!(ChipLayout::from_json(&broken.to_json().unwrap()).is_err());
        assert!(ChipLayout::from_json("not json").is_err());
    }

    proptest! {
        #[test]
        fn packing_monotonicity(
            fov in 0.4e-3..2.0e-3f64,
            pitch in 120e-6..400e-6f64,
            num_ions in 1..35usize,
            spacing in 2e-6..7e-6f64,
            grow in 1.05..1.6f64,
        ) {
            let chain = ChainSpec { num_ions, ion_spacing: spacing };
            prop_assume!(chain.extent() < 0.4e-3);
            let base = pack_zones(fov, pitch, chain).unwrap().zone_count();
            let bigger_fov = pack_zones(fov * grow, pitch, chain).unwrap().zone_count();
            let tighter_pitch = pack_zones(fov, pitch / grow, chain).unwrap().zone_count();
            prop_assert!(bigger_fov >= base);
            prop_assert!(tighter_pitch >= base);

            // count always equals the brute-force oracle and qubit arithmetic
            let layout = pack_zones(fov, pitch, chain).unwrap();
            prop_assert_eq!(layout.zone_count(), oracle_count(fov, pitch, chain, DEFAULT_EDGE_MARGIN));
            prop_assert_eq!(layout.total_qubits(), layout.zone_count() * num_ions);
        }

        #[test]
        fn distance_is_a_metric(seed in 0..1000u64) {
            use rand::{Rng, SeedableRng};
            let layout = defaults();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let random_endpoint = |rng: &mut rand_chacha::ChaCha8Rng| {
                let z = rng.gen_range(0..layout.zone_count());
                let i = rng.gen_range(0..layout.zones[z].chain.num_ions);
                Endpoint::Ion { zone: z, ion: i }
            };
            let a = random_endpoint(&mut rng);
            let b = random_endpoint(&mut rng);
            let c = random_endpoint(&mut rng);
            let dab = layout.distance(a, b).unwrap();
            let dba = layout.distance(b, a).unwrap();
            let dac = layout.distance(a, c).unwrap();
            let dcb = layout.distance(c, b).unwrap();
            prop_assert_eq!(dab, dba);
            prop_assert!(dab >= 0.0);
            prop_assert!(dab <= dac + dcb + 1e-15);
            prop_assert_eq!(layout.distance(a, a).unwrap(), 0.0);
        }
    }
}
