//! Arterial-territory overlap statistics for lesion masks.
//!
//! An atlas assigns each voxel one of ten territory labels (or background 0);
//! a lesion mask resampled onto the atlas grid is tallied against those
//! labels, yielding per-territory percentages, a dominant territory, and the
//! vessel class it implies. Vertebrobasilar and ventricle territories have
//! no vessel class of their own and map to `Unmapped`; when one of those
//! dominates, the report carries a best-effort runner-up so the caller still
//! gets an actionable vessel suggestion.

use crate::registration::{register_rigid, RegistrationConfig};
use crate::resample::apply_transform;
use crate::transform::RigidTransform;
use crate::volume::{GridSpec, Volume3D};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Grids must agree entrywise within this tolerance to count as "the same".
pub const GRID_TOL: f64 = 1e-4;

/// The ten territory labels, with their canonical codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TerritoryLabel {
    /// Right middle cerebral artery territory (code 1).
    Mcar,
    /// Left middle cerebral artery territory (code 2).
    Mcal,
    /// Right anterior cerebral artery territory (code 3).
    Acar,
    /// Left anterior cerebral artery territory (code 4).
    Acal,
    /// Right posterior cerebral artery territory (code 5).
    Pcar,
    /// Left posterior cerebral artery territory (code 6).
    Pcal,
    /// Right vertebrobasilar territory (code 7).
    Vbr,
    /// Left vertebrobasilar territory (code 8).
    Vbl,
    /// Right lateral ventricle (code 9).
    Lvr,
    /// Left lateral ventricle (code 10).
    Lvl,
}

impl TerritoryLabel {
    pub const ALL: [TerritoryLabel; 10] = [
        TerritoryLabel::Mcar,
        TerritoryLabel::Mcal,
        TerritoryLabel::Acar,
        TerritoryLabel::Acal,
        TerritoryLabel::Pcar,
        TerritoryLabel::Pcal,
        TerritoryLabel::Vbr,
        TerritoryLabel::Vbl,
        TerritoryLabel::Lvr,
        TerritoryLabel::Lvl,
    ];

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&l| l == self).unwrap() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<TerritoryLabel> {
        match code {
            1..=10 => Some(Self::ALL[code as usize - 1]),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TerritoryLabel::Mcar => "MCAR",
            TerritoryLabel::Mcal => "MCAL",
            TerritoryLabel::Acar => "ACAR",
            TerritoryLabel::Acal => "ACAL",
            TerritoryLabel::Pcar => "PCAR",
            TerritoryLabel::Pcal => "PCAL",
            TerritoryLabel::Vbr => "VBR",
            TerritoryLabel::Vbl => "VBL",
            TerritoryLabel::Lvr => "LVR",
            TerritoryLabel::Lvl => "LVL",
        }
    }
}

impl fmt::Display for TerritoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TerritoryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|l| l.name() == s)
            .copied()
            .ok_or_else(|| Error::BadAtlas(format!("unknown territory name {s:?}")))
    }
}

/// The vessel classes a dominant territory can imply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VesselClass {
    AnteriorCirculation,
    PosteriorCirculation,
    #[serde(rename = "LeftMCA")]
    LeftMca,
    #[serde(rename = "RightMCA")]
    RightMca,
    /// Vertebrobasilar and ventricular territories carry no vessel class.
    Unmapped,
}

impl VesselClass {
    pub fn name(self) -> &'static str {
        match self {
            VesselClass::AnteriorCirculation => "AnteriorCirculation",
            VesselClass::PosteriorCirculation => "PosteriorCirculation",
            VesselClass::LeftMca => "LeftMCA",
            VesselClass::RightMca => "RightMCA",
            VesselClass::Unmapped => "Unmapped",
        }
    }
}

impl fmt::Display for VesselClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Territory -> vessel class. MCA territories keep their side; ACA and PCA
/// territories collapse to their circulation; vertebrobasilar and ventricle
/// territories have no mapping.
pub fn map_territory(label: TerritoryLabel) -> VesselClass {
    match label {
        TerritoryLabel::Mcar => VesselClass::RightMca,
        TerritoryLabel::Mcal => VesselClass::LeftMca,
        TerritoryLabel::Acar | TerritoryLabel::Acal => VesselClass::AnteriorCirculation,
        TerritoryLabel::Pcar | TerritoryLabel::Pcal => VesselClass::PosteriorCirculation,
        TerritoryLabel::Vbr
        | TerritoryLabel::Vbl
        | TerritoryLabel::Lvr
        | TerritoryLabel::Lvl => VesselClass::Unmapped,
    }
}

/// A label volume plus the code -> territory assignment of its sidecar.
/// Construction validates everything the overlap pass relies on: codes are
/// a bijection onto the ten territories, and every voxel is an integer in
/// `0..=10` (0 is background).
#[derive(Debug, Clone)]
pub struct AtlasVolume {
    labels: Volume3D,
    names: BTreeMap<u8, TerritoryLabel>,
}

impl AtlasVolume {
    pub fn new(labels: Volume3D, names: BTreeMap<u8, TerritoryLabel>) -> Result<Self> {
        if names.len() != 10 {
            return Err(Error::BadAtlas(format!(
                "label sidecar has {} entries, expected all 10 codes",
                names.len()
            )));
        }
        for code in 1..=10u8 {
            if !names.contains_key(&code) {
                return Err(Error::BadAtlas(format!("label sidecar is missing code {code}")));
            }
        }
        let mut seen = [false; 10];
        for &label in names.values() {
            let slot = &mut seen[label.code() as usize - 1];
            if *slot {
                return Err(Error::BadAtlas(format!(
                    "label sidecar assigns {label} to more than one code"
                )));
            }
            *slot = true;
        }
        for (i, &v) in labels.data().iter().enumerate() {
            let r = v.round();
            if (v - r).abs() > 1e-6 || !(0.0..=10.0).contains(&r) {
                return Err(Error::BadAtlas(format!(
                    "voxel {i} holds {v}, expected an integer code in 0..=10"
                )));
            }
        }
        Ok(AtlasVolume { labels, names })
    }

    /// Identity sidecar: code 1 is MCAR, ..., code 10 is LVL.
    pub fn with_default_names(labels: Volume3D) -> Result<Self> {
        Self::new(labels, default_names())
    }

    pub fn labels(&self) -> &Volume3D {
        &self.labels
    }

    pub fn names(&self) -> &BTreeMap<u8, TerritoryLabel> {
        &self.names
    }

    pub fn grid(&self) -> GridSpec {
        self.labels.grid()
    }

    /// The territory a voxel value denotes (None for background).
    pub fn territory_of(&self, value: f64) -> Option<TerritoryLabel> {
        let code = value.round() as i64;
        if code == 0 {
            None
        } else {
            self.names.get(&(code as u8)).copied()
        }
    }
}

pub fn default_names() -> BTreeMap<u8, TerritoryLabel> {
    TerritoryLabel::ALL.iter().map(|&l| (l.code(), l)).collect()
}

/// Parse a `{"1": "MCAR", ...}` sidecar file.
pub fn load_atlas_names(path: impl AsRef<Path>) -> Result<BTreeMap<u8, TerritoryLabel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let raw: BTreeMap<String, String> = serde_json::from_str(&text)?;
    let mut names = BTreeMap::new();
    for (key, value) in raw {
        let code: u8 = key
            .parse()
            .map_err(|_| Error::BadAtlas(format!("sidecar key {key:?} is not a code")))?;
        if !(1..=10).contains(&code) {
            return Err(Error::BadAtlas(format!(
                "sidecar code {code} outside 1..=10"
            )));
        }
        names.insert(code, value.parse()?);
    }
    Ok(names)
}

fn round4<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e4).round() / 1e4)
}

/// One row of the overlap table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerritoryOverlap {
    pub label: TerritoryLabel,
    pub code: u8,
    pub voxel_count: u64,
    /// Percent of lesion voxels, on a denominator of *all* lesion voxels
    /// (so voxels off the atlas depress every territory's share).
    #[serde(serialize_with = "round4")]
    pub percentage: f64,
}

/// Runner-up suggestion attached when the dominant territory has no vessel
/// class of its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryRunnerUp {
    pub label: TerritoryLabel,
    pub vessel: VesselClass,
    #[serde(serialize_with = "round4")]
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasOverlapReport {
    /// All ten territories, in canonical code order.
    pub territories: Vec<TerritoryOverlap>,
    pub total_lesion_voxels: u64,
    /// Lesion voxels sitting on atlas background.
    pub outside_atlas_voxels: u64,
    /// Highest-count territory; absent when the lesion touches no territory.
    pub dominant: Option<TerritoryLabel>,
    pub dominant_vessel: Option<VesselClass>,
    /// True when the dominant count is shared (the lowest code wins then).
    pub dominant_tie: bool,
    pub advisory_runner_up: Option<AdvisoryRunnerUp>,
    /// Rigid transform that carried the lesion onto the atlas grid.
    pub transform_used: RigidTransform,
}

impl AtlasOverlapReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(Error::io(path))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Tally a lesion mask (already on the atlas grid) against the atlas.
pub fn compute_overlap(lesion: &Volume3D, atlas: &AtlasVolume) -> Result<AtlasOverlapReport> {
    if !lesion.same_grid(atlas.labels(), GRID_TOL) {
        return Err(Error::GridMismatch(format!(
            "lesion grid {:?} does not match atlas grid {:?}",
            lesion.extents(),
            atlas.labels().extents()
        )));
    }

    let mut counts = [0u64; 10];
    let mut outside = 0u64;
    let mut total = 0u64;
    for (&lv, &av) in lesion.data().iter().zip(atlas.labels().data()) {
        if lv > 0.5 {
            total += 1;
            match atlas.territory_of(av) {
                Some(label) => counts[label.code() as usize - 1] += 1,
                None => outside += 1,
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyLesion);
    }

    let territories: Vec<TerritoryOverlap> = TerritoryLabel::ALL
        .iter()
        .map(|&label| {
            let count = counts[label.code() as usize - 1];
            TerritoryOverlap {
                label,
                code: label.code(),
                voxel_count: count,
                percentage: 100.0 * count as f64 / total as f64,
            }
        })
        .collect();

    let max_count = counts.iter().copied().max().unwrap_or(0);
    let (dominant, dominant_tie) = if max_count == 0 {
        (None, false)
    } else {
        let winners: Vec<TerritoryLabel> = TerritoryLabel::ALL
            .iter()
            .copied()
            .filter(|l| counts[l.code() as usize - 1] == max_count)
            .collect();
        (Some(winners[0]), winners.len() > 1)
    };
    let dominant_vessel = dominant.map(map_territory);

    let advisory_runner_up = if dominant_vessel == Some(VesselClass::Unmapped) {
        TerritoryLabel::ALL
            .iter()
            .copied()
            .filter(|&l| map_territory(l) != VesselClass::Unmapped)
            .filter(|&l| counts[l.code() as usize - 1] > 0)
            .max_by_key(|&l| {
                // max_by_key keeps the *last* max, so order descending by
                // code to make the lowest code win ties.
                (counts[l.code() as usize - 1], std::cmp::Reverse(l.code()))
            })
            .map(|l| AdvisoryRunnerUp {
                label: l,
                vessel: map_territory(l),
                percentage: 100.0 * counts[l.code() as usize - 1] as f64 / total as f64,
            })
    } else {
        None
    };

    Ok(AtlasOverlapReport {
        territories,
        total_lesion_voxels: total,
        outside_atlas_voxels: outside,
        dominant,
        dominant_vessel,
        dominant_tie,
        advisory_runner_up,
        transform_used: RigidTransform::identity(),
    })
}

/// End-to-end analysis: register the patient MRI to the atlas template,
/// carry the lesion through the recovered transform, and tally it.
///
/// The lesion must share the patient MRI's grid, and the template must share
/// the atlas label grid.
pub fn analyze_lesion(
    lesion: &Volume3D,
    patient_mri: &Volume3D,
    atlas: &AtlasVolume,
    template: &Volume3D,
    cfg: &RegistrationConfig,
) -> Result<AtlasOverlapReport> {
    if !lesion.same_grid(patient_mri, GRID_TOL) {
        return Err(Error::GridMismatch(
            "lesion mask and patient MRI are on different grids".into(),
        ));
    }
    if !template.same_grid(atlas.labels(), GRID_TOL) {
        return Err(Error::GridMismatch(
            "registration template and atlas labels are on different grids".into(),
        ));
    }
    let reg = register_rigid(template, patient_mri, cfg)?;
    let lesion_on_atlas = apply_transform(lesion, &reg.transform, &atlas.grid())?;
    let mut report = compute_overlap(&lesion_on_atlas, atlas)?;
    report.transform_used = reg.transform;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::Affine;
    use rand::{Rng, SeedableRng};

    fn flat_atlas(extents: [usize; 3], f: impl Fn(usize, usize, usize) -> f64) -> AtlasVolume {
        let grid = GridSpec::new(extents, Affine::identity()).unwrap();
        AtlasVolume::with_default_names(Volume3D::from_voxel_fn(&grid, |x, y, z| f(x, y, z)))
            .unwrap()
    }

    fn mask(extents: [usize; 3], voxels: &[(usize, usize, usize)]) -> Volume3D {
        let grid = GridSpec::new(extents, Affine::identity()).unwrap();
        let mut v = vec![0.0; grid.num_voxels()];
        for &(x, y, z) in voxels {
            v[x + extents[0] * (y + extents[1] * z)] = 1.0;
        }
        Volume3D::new(extents, Affine::identity(), v).unwrap()
    }

    #[test]
    fn vessel_mapping_is_exactly_the_canonical_table() {
        use TerritoryLabel::*;
        use VesselClass::*;
        assert_eq!(map_territory(Mcar), RightMca);
        assert_eq!(map_territory(Mcal), LeftMca);
        assert_eq!(map_territory(Acar), AnteriorCirculation);
        assert_eq!(map_territory(Acal), AnteriorCirculation);
        assert_eq!(map_territory(Pcar), PosteriorCirculation);
        assert_eq!(map_territory(Pcal), PosteriorCirculation);
        assert_eq!(map_territory(Vbr), Unmapped);
        assert_eq!(map_territory(Vbl), Unmapped);
        assert_eq!(map_territory(Lvr), Unmapped);
        assert_eq!(map_territory(Lvl), Unmapped);
    }

    #[test]
    fn codes_and_names_round_trip() {
        for (i, &label) in TerritoryLabel::ALL.iter().enumerate() {
            assert_eq!(label.code() as usize, i + 1);
            assert_eq!(TerritoryLabel::from_code(label.code()), Some(label));
            assert_eq!(label.name().parse::<TerritoryLabel>().unwrap(), label);
        }
        assert_eq!(TerritoryLabel::from_code(0), None);
        assert_eq!(TerritoryLabel::from_code(11), None);
        assert!("MCA".parse::<TerritoryLabel>().is_err());
    }

    #[test]
    fn lesion_fully_inside_one_territory_reports_100_percent() {
        // Code 1 (MCAR) half-space; lesion sits entirely inside it.
        let atlas = flat_atlas([8, 8, 8], |x, _, _| if x < 4 { 1.0 } else { 0.0 });
        let lesion = mask([8, 8, 8], &[(0, 0, 0), (1, 2, 3), (3, 7, 7), (2, 4, 4)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.total_lesion_voxels, 4);
        assert_eq!(report.outside_atlas_voxels, 0);
        assert_eq!(report.territories[0].voxel_count, 4);
        assert_eq!(report.territories[0].percentage, 100.0);
        for row in &report.territories[1..] {
            assert_eq!(row.voxel_count, 0);
            assert_eq!(row.percentage, 0.0);
        }
        assert_eq!(report.dominant, Some(TerritoryLabel::Mcar));
        assert_eq!(report.dominant_vessel, Some(VesselClass::RightMca));
        assert!(!report.dominant_tie);
        assert!(report.advisory_runner_up.is_none());
    }

    #[test]
    fn sixty_forty_split_is_counted_by_hand() {
        // Row y=0 is MCAL (code 2), row y=1 is ACAL (code 4).
        let atlas = flat_atlas([5, 5, 5], |_, y, z| match (y, z) {
            (0, 0) => 2.0,
            (1, 0) => 4.0,
            _ => 0.0,
        });
        let lesion = mask(
            [5, 5, 5],
            &[(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 1, 0), (1, 1, 0)],
        );
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.total_lesion_voxels, 5);
        let mcal = &report.territories[1];
        let acal = &report.territories[3];
        assert_eq!((mcal.voxel_count, acal.voxel_count), (3, 2));
        assert_eq!(mcal.percentage, 60.0);
        assert_eq!(acal.percentage, 40.0);
        assert_eq!(report.dominant, Some(TerritoryLabel::Mcal));
        assert_eq!(report.dominant_vessel, Some(VesselClass::LeftMca));
    }

    #[test]
    fn lesion_on_background_only_has_no_dominant() {
        let atlas = flat_atlas([6, 6, 6], |x, _, _| if x > 3 { 5.0 } else { 0.0 });
        let lesion = mask([6, 6, 6], &[(0, 0, 0), (1, 1, 1)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.total_lesion_voxels, 2);
        assert_eq!(report.outside_atlas_voxels, 2);
        assert!(report.territories.iter().all(|t| t.voxel_count == 0));
        assert_eq!(report.dominant, None);
        assert_eq!(report.dominant_vessel, None);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"dominant\":null"));
    }

    #[test]
    fn empty_lesion_is_an_error() {
        let atlas = flat_atlas([4, 4, 4], |_, _, _| 1.0);
        let lesion = mask([4, 4, 4], &[]);
        assert!(matches!(
            compute_overlap(&lesion, &atlas),
            Err(Error::EmptyLesion)
        ));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let atlas = flat_atlas([4, 4, 4], |_, _, _| 1.0);
        let lesion = mask([5, 4, 4], &[(0, 0, 0)]);
        assert!(matches!(
            compute_overlap(&lesion, &atlas),
            Err(Error::GridMismatch(_))
        ));
        let grid = GridSpec::new([4, 4, 4], Affine::scaling(1.001, 1.0, 1.0)).unwrap();
        let lesion = Volume3D::from_voxel_fn(&grid, |x, _, _| if x == 0 { 1.0 } else { 0.0 });
        assert!(matches!(
            compute_overlap(&lesion, &atlas),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn ties_break_toward_the_lowest_code_and_are_flagged() {
        // One voxel each of MCAR (1) and MCAL (2).
        let atlas = flat_atlas([4, 4, 4], |x, y, _| match (x, y) {
            (0, 0) => 1.0,
            (1, 0) => 2.0,
            _ => 0.0,
        });
        let lesion = mask([4, 4, 4], &[(0, 0, 0), (1, 0, 0)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Mcar));
        assert!(report.dominant_tie);
    }

    #[test]
    fn unmapped_dominant_gets_an_advisory_runner_up() {
        // Three voxels of VBL (8), one of PCAL (6).
        let atlas = flat_atlas([4, 4, 4], |x, y, _| match (x, y) {
            (0..=2, 0) => 8.0,
            (3, 0) => 6.0,
            _ => 0.0,
        });
        let lesion = mask([4, 4, 4], &[(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Vbl));
        assert_eq!(report.dominant_vessel, Some(VesselClass::Unmapped));
        let advisory = report.advisory_runner_up.unwrap();
        assert_eq!(advisory.label, TerritoryLabel::Pcal);
        assert_eq!(advisory.vessel, VesselClass::PosteriorCirculation);
        assert_eq!(advisory.percentage, 25.0);
    }

    #[test]
    fn unmapped_dominant_without_mapped_voxels_has_no_advisory() {
        let atlas = flat_atlas([4, 4, 4], |x, _, _| if x == 0 { 9.0 } else { 0.0 });
        let lesion = mask([4, 4, 4], &[(0, 1, 1), (0, 2, 2)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Lvr));
        assert_eq!(report.dominant_vessel, Some(VesselClass::Unmapped));
        assert!(report.advisory_runner_up.is_none());
    }

    #[test]
    fn permuted_sidecars_redirect_the_counting() {
        // Atlas voxels carry code 1, but this sidecar says code 1 is ACAL.
        let grid = GridSpec::new([3, 3, 3], Affine::identity()).unwrap();
        let labels = Volume3D::from_voxel_fn(&grid, |_, _, _| 1.0);
        let mut names = default_names();
        names.insert(1, TerritoryLabel::Acal);
        names.insert(4, TerritoryLabel::Mcar);
        let atlas = AtlasVolume::new(labels, names).unwrap();
        let lesion = mask([3, 3, 3], &[(1, 1, 1)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Acal));
        assert_eq!(
            report.dominant_vessel,
            Some(VesselClass::AnteriorCirculation)
        );
    }

    #[test]
    fn malformed_atlases_are_rejected() {
        let grid = GridSpec::new([3, 3, 3], Affine::identity()).unwrap();
        // Non-integer voxel.
        let labels = Volume3D::from_voxel_fn(&grid, |x, _, _| if x == 0 { 1.5 } else { 0.0 });
        assert!(matches!(
            AtlasVolume::with_default_names(labels),
            Err(Error::BadAtlas(_))
        ));
        // Code out of range.
        let labels = Volume3D::from_voxel_fn(&grid, |x, _, _| if x == 0 { 11.0 } else { 0.0 });
        assert!(matches!(
            AtlasVolume::with_default_names(labels),
            Err(Error::BadAtlas(_))
        ));
        // Sidecar with a duplicate territory.
        let labels = Volume3D::from_voxel_fn(&grid, |_, _, _| 0.0);
        let mut names = default_names();
        names.insert(1, TerritoryLabel::Mcal);
        assert!(matches!(
            AtlasVolume::new(labels, names),
            Err(Error::BadAtlas(_))
        ));
        // Sidecar missing codes.
        let labels = Volume3D::from_voxel_fn(&grid, |_, _, _| 0.0);
        let mut names = default_names();
        names.remove(&7);
        assert!(matches!(
            AtlasVolume::new(labels, names),
            Err(Error::BadAtlas(_))
        ));
    }

    #[test]
    fn sidecar_files_parse_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("names.json");
        std::fs::write(
            &path,
            r#"{"1":"MCAR","2":"MCAL","3":"ACAR","4":"ACAL","5":"PCAR",
               "6":"PCAL","7":"VBR","8":"VBL","9":"LVR","10":"LVL"}"#,
        )
        .unwrap();
        let names = load_atlas_names(&path).unwrap();
        assert_eq!(names, default_names());

        std::fs::write(&path, r#"{"1":"NOPE"}"#).unwrap();
        assert!(matches!(load_atlas_names(&path), Err(Error::BadAtlas(_))));
        std::fs::write(&path, r#"{"zero":"MCAR"}"#).unwrap();
        assert!(matches!(load_atlas_names(&path), Err(Error::BadAtlas(_))));
        std::fs::write(&path, r#"{"11":"MCAR"}"#).unwrap();
        assert!(matches!(load_atlas_names(&path), Err(Error::BadAtlas(_))));
    }

    #[test]
    fn counts_are_conserved_and_match_a_brute_force_tally() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let grid = GridSpec::new([8, 8, 8], Affine::identity()).unwrap();
            let labels =
                Volume3D::from_voxel_fn(&grid, |_, _, _| f64::from(rng.gen_range(0..=10u8)));
            let atlas = AtlasVolume::with_default_names(labels.clone()).unwrap();
            let lesion = Volume3D::from_voxel_fn(&grid, |_, _, _| {
                if rng.gen_bool(0.3) {
                    1.0
                } else {
                    0.0
                }
            });
            let total_set = lesion.data().iter().filter(|&&v| v > 0.5).count() as u64;
            if total_set == 0 {
                continue;
            }
            let report = compute_overlap(&lesion, &atlas).unwrap();
            assert_eq!(report.total_lesion_voxels, total_set);

            // Independent per-voxel recount.
            let mut by_code = [0u64; 11];
            for (&lv, &av) in lesion.data().iter().zip(labels.data()) {
                if lv > 0.5 {
                    by_code[av as usize] += 1;
                }
            }
            assert_eq!(report.outside_atlas_voxels, by_code[0]);
            let mut percent_sum = 0.0;
            for row in &report.territories {
                assert_eq!(row.voxel_count, by_code[row.code as usize]);
                percent_sum += row.percentage;
            }
            let on_atlas = 100.0 * (total_set - by_code[0]) as f64 / total_set as f64;
            assert!((percent_sum - on_atlas).abs() < 1e-9);
            assert_eq!(
                report.territories.iter().map(|t| t.voxel_count).sum::<u64>()
                    + report.outside_atlas_voxels,
                report.total_lesion_voxels
            );

            // Dominant = argmax of the reported counts, lowest code first.
            if let Some(dom) = report.dominant {
                let max = report.territories.iter().map(|t| t.voxel_count).max().unwrap();
                let first = report
                    .territories
                    .iter()
                    .find(|t| t.voxel_count == max)
                    .unwrap();
                assert_eq!(dom, first.label);
            }
        }
    }

    #[test]
    fn analysis_with_an_aligned_patient_stays_near_identity() {
        use crate::phantom::{ball_mask, blob_phantom, default_blobs, label_centroid_world, micro_atlas};
        let atlas = micro_atlas(24);
        let template = blob_phantom(&atlas.grid(), &default_blobs(23.0));
        let lesion_center = label_centroid_world(&atlas, TerritoryLabel::Mcal).unwrap();
        let lesion = ball_mask(&atlas.grid(), lesion_center, 2.0);
        let report = analyze_lesion(
            &lesion,
            &template,
            &atlas,
            &template,
            &RegistrationConfig::default(),
        )
        .unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Mcal));
        assert_eq!(report.dominant_vessel, Some(VesselClass::LeftMca));
        assert!(report.transform_used.max_abs_translation() < 0.1);
        assert!(report.transform_used.max_abs_rotation() < 0.002);
    }

    #[test]
    fn analysis_recovers_a_shifted_patient() {
        use crate::phantom::{
            ball_mask, blob_phantom, blob_phantom_moved, default_blobs, label_centroid_world,
            micro_atlas,
        };
        use crate::resample::apply_transform;

        let atlas = micro_atlas(24);
        let grid = atlas.grid();
        let blobs = default_blobs(23.0);
        let template = blob_phantom(&grid, &blobs);

        // The patient's anatomy sits at `truth` relative to the template.
        let truth = RigidTransform::new([0.0, 0.0, 0.03], [2.0, -1.5, 1.0]);
        let patient = blob_phantom_moved(&grid, &blobs, &truth);

        // Draw the lesion in atlas space inside ACAL, then carry it into the
        // patient's native space with the inverse truth transform.
        let lesion_center = label_centroid_world(&atlas, TerritoryLabel::Acal).unwrap();
        let lesion_atlas = ball_mask(&grid, lesion_center, 2.0);
        let lesion_native = apply_transform(&lesion_atlas, &truth.inverse(), &grid).unwrap();

        let report = analyze_lesion(
            &lesion_native,
            &patient,
            &atlas,
            &template,
            &RegistrationConfig::default(),
        )
        .unwrap();
        assert_eq!(report.dominant, Some(TerritoryLabel::Acal));
        assert_eq!(
            report.dominant_vessel,
            Some(VesselClass::AnteriorCirculation)
        );
        // The recovered transform should match the truth closely.
        for i in 0..3 {
            assert!(
                (report.transform_used.translations[i] - truth.translations[i]).abs() < 0.5,
                "{:?}",
                report.transform_used
            );
        }
        assert!((report.transform_used.rotations[2] - 0.03).abs() < 0.02);
    }

    #[test]
    fn analysis_rejects_mismatched_input_grids() {
        use crate::phantom::{blob_phantom, default_blobs, micro_atlas};
        let atlas = micro_atlas(16);
        let template = blob_phantom(&atlas.grid(), &default_blobs(15.0));
        let other_grid = GridSpec::new([17, 16, 16], Affine::identity()).unwrap();
        let lesion = Volume3D::from_voxel_fn(&other_grid, |_, _, _| 1.0);
        let err = analyze_lesion(
            &lesion,
            &template,
            &atlas,
            &template,
            &RegistrationConfig::default(),
        );
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn report_json_rounds_percentages_to_four_decimals() {
        let atlas = flat_atlas([4, 4, 4], |x, y, _| match (x, y) {
            (0..=1, 0) => 1.0,
            (2, 0) => 2.0,
            _ => 0.0,
        });
        let lesion = mask([4, 4, 4], &[(0, 0, 0), (1, 0, 0), (2, 0, 0)]);
        let report = compute_overlap(&lesion, &atlas).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        // 2/3 and 1/3 render rounded, not as long doubles.
        assert!(json.contains("66.6667"), "{json}");
        assert!(json.contains("33.3333"), "{json}");
        let back: AtlasOverlapReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.dominant, Some(TerritoryLabel::Mcar));
        assert_eq!(back.territories[0].voxel_count, 2);
    }
}
