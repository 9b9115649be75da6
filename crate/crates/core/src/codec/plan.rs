//! GF-group coding structures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GF_INTERVAL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodingConfig {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "tex-all")]
    TexAll,
    #[serde(rename = "tex-sp")]
    TexSp,
    #[serde(rename = "tex-cp")]
    TexCp,
}

impl CodingConfig {
    pub const ALL: [CodingConfig; 4] = [
        CodingConfig::Baseline,
        CodingConfig::TexAll,
        CodingConfig::TexSp,
        CodingConfig::TexCp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CodingConfig::Baseline => "baseline",
            CodingConfig::TexAll => "tex-all",
            CodingConfig::TexSp => "tex-sp",
            CodingConfig::TexCp => "tex-cp",
        }
    }

    pub fn uses_texture(self) -> bool {
        self != CodingConfig::Baseline
    }
}

impl fmt::Display for CodingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodingConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown coding configuration {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Golden,
    Altref,
    Inter,
}

impl FrameKind {
    pub fn code(self) -> u8 {
        match self {
            FrameKind::Golden => 0,
            FrameKind::Altref => 1,
            FrameKind::Inter => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(FrameKind::Golden),
            1 => Some(FrameKind::Altref),
            2 => Some(FrameKind::Inter),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub display_index: usize,
    /// Position in the sequence-wide coding order.
    pub coding_order: usize,
    pub kind: FrameKind,
    pub layer: usize,
    pub texture_enabled: bool,
    /// References of the conventional path, display indices.
    pub refs: Vec<usize>,
    /// References warped by texture mode; two means compound prediction.
    pub texture_refs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfGroupPlan {
    pub interval: usize,
    pub golden: usize,
    pub altref: usize,
    /// Frames coded by this group, in coding order. The group's GOLDEN frame is
    /// listed only in the first group; later groups reuse the previous ALTREF.
    pub entries: Vec<PlanEntry>,
}

/// Splits [lo, hi] recursively; the midpoint is chosen at an even offset from
/// `golden` whenever the span is odd, so odd offsets stay leaves with
/// neighbours d-1 and d+1 on both sides.
fn pyramid(lo: usize, hi: usize, golden: usize, layer: usize, out: &mut Vec<(usize, usize, Vec<usize>)>) {
    if hi - lo < 2 {
        return;
    }
    let floor = (lo + hi) / 2;
    let mid = if (hi - lo) % 2 == 0 || (floor - golden) % 2 == 0 {
        floor
    } else {
        floor + 1
    };
    out.push((mid, layer, vec![lo, hi]));
    pyramid(lo, mid, golden, layer + 1, out);
    pyramid(mid, hi, golden, layer + 1, out);
}

/// Coding plan for `n_frames`. `interval` applies to tex-all only; the
/// hierarchical configurations always use 8.
pub fn plan_gf_groups(n_frames: usize, config: CodingConfig, interval: usize) -> Result<Vec<GfGroupPlan>> {
    if n_frames < 2 {
        return Err(Error::Input(format!("need at least 2 frames, got {n_frames}")));
    }
    let interval = if config == CodingConfig::TexAll {
        if !(4..=16).contains(&interval) {
            return Err(Error::Input(format!("GF interval {interval} outside 4..=16")));
        }
        interval
    } else {
        GF_INTERVAL
    };
    let mut groups = Vec::new();
    let mut order = 0;
    let mut golden = 0;
    while golden < n_frames - 1 {
        let altref = (golden + interval).min(n_frames - 1);
        let mut entries = Vec::new();
        let mut push = |display_index, kind, layer, texture_enabled, refs: Vec<usize>, texture_refs| {
            entries.push(PlanEntry {
                display_index,
                coding_order: order,
                kind,
                layer,
                texture_enabled,
                refs,
                texture_refs,
            });
            order += 1;
        };
        if golden == 0 {
            push(0, FrameKind::Golden, 0, false, vec![], vec![]);
        }
        push(altref, FrameKind::Altref, 0, false, vec![golden], vec![]);
        if config == CodingConfig::TexAll {
            for d in golden + 1..altref {
                let refs = vec![d - 1, altref];
                push(d, FrameKind::Inter, 1, true, refs, vec![d - 1]);
            }
        } else {
            let mut nodes = Vec::new();
            pyramid(golden, altref, golden, 1, &mut nodes);
            for (d, layer, refs) in nodes {
                let odd = (d - golden) % 2 == 1;
                let (enabled, texture_refs) = match config {
                    CodingConfig::TexSp if odd => (true, vec![d - 1]),
                    CodingConfig::TexCp if odd => (true, vec![d - 1, d + 1]),
                    _ => (false, vec![]),
                };
                push(d, FrameKind::Inter, layer, enabled, refs, texture_refs);
            }
        }
        groups.push(GfGroupPlan {
            interval,
            golden,
            altref,
            entries,
        });
        golden = altref;
    }
    Ok(groups)
}

/// All entries of a plan in coding order.
pub fn coding_sequence(groups: &[GfGroupPlan]) -> Vec<PlanEntry> {
    groups.iter().flat_map(|g| g.entries.iter().cloned()).collect()
}
