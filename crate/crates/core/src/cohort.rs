//! Profile vectorization, k-means clustering and group summaries.
//!
//! Encoding (16 dims, every entry in [0, 1]):
//!
//! | offset | content |
//! |--------|---------|
//! | 0..6   | learning traits, `(level - 1) / 4`, in [`OrdinalAttr::TRAITS`] order |
//! | 6..11  | knowledge points, same scaling, in [`OrdinalAttr::KNOWLEDGE`] order |
//! | 11..15 | one-hot major: computer_science, design, business, other |
//! | 15     | education year, freshman = 0 .. graduate = 1 |

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::students::profile::{Major, OrdinalAttr, StudentProfile};

pub const DIM: usize = 16;
pub const MAJOR_OFFSET: usize = 11;
pub const YEAR_OFFSET: usize = 15;
pub const DEFAULT_K: usize = 4;
pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohortError {
    #[error("k = {k} but only {n} profiles")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be >= 1")]
    ZeroK,
    #[error("assignment does not cover profile `{0}`")]
    Uncovered(String),
    #[error("clustering mask selects no dimension")]
    EmptyMask,
    #[error("clustering mask has {0} entries, expected {DIM}")]
    MaskLength(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVector {
    pub profile_id: String,
    pub values: Vec<f64>,
}

fn ordinal_order() -> impl Iterator<Item = OrdinalAttr> {
    OrdinalAttr::TRAITS.iter().chain(OrdinalAttr::KNOWLEDGE).copied()
}

pub fn vectorize(profile: &StudentProfile) -> ProfileVector {
    let mut values = Vec::with_capacity(DIM);
    values.extend(ordinal_order().map(|a| (profile.level(a) as f64 - 1.0) / 4.0));
    values.extend(Major::ALL.iter().map(|m| if *m == profile.major { 1.0 } else { 0.0 }));
    values.push(profile.education_year.scaled());
    ProfileVector { profile_id: profile.id.clone(), values }
}

/// Which encoding dimensions take part in distance computations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionMask(pub Vec<bool>);

impl Default for DimensionMask {
    fn default() -> Self {
        Self(vec![true; DIM])
    }
}

impl DimensionMask {
    /// Mask over a subset of ordinal attributes, optionally with major and year.
    pub fn from_attributes(attrs: &[OrdinalAttr], major: bool, year: bool) -> Self {
        let mut mask: Vec<bool> = ordinal_order().map(|a| attrs.contains(&a)).collect();
        mask.extend([major; 4]);
        mask.push(year);
        Self(mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub seed: u64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<DimensionMask>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, c)| **c == cluster)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

fn dist2(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((x, y), _)| (x - y) * (x - y))
        .sum()
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let mut sums = vec![vec![0.0; DIM]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|x| x / n as f64).collect()))
        .collect()
}

/// k-means++ seeding: first centre uniform, then D²-weighted among the
/// points not yet chosen.
fn seed_centres(points: &[Vec<f64>], k: usize, mask: &[bool], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]], mask)).collect();
    while chosen.len() < k {
        let candidates: Vec<usize> = (0..points.len()).filter(|i| !chosen.contains(i)).collect();
        let total: f64 = candidates.iter().map(|&i| d2[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = *candidates.last().expect("k <= n leaves a candidate");
            for &i in &candidates {
                if target < d2[i] {
                    pick = i;
                    break;
                }
                target -= d2[i];
            }
            pick
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        chosen.push(pick);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[pick], mask));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Nearest centre; on ties the point's current cluster wins, then the lowest index.
fn nearest(p: &[f64], centres: &[Vec<f64>], mask: &[bool], current: Option<usize>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (j, c) in centres.iter().enumerate() {
        let d = dist2(p, c, mask);
        if d < best.1 || (d == best.1 && Some(j) == current) {
            best = (j, d);
        }
    }
    best
}

/// Result of a traced run: the assignment plus the inertia measured after
/// every assignment step.
#[derive(Debug, Clone)]
pub struct ClusterTrace {
    pub assignment: ClusterAssignment,
    pub inertia_history: Vec<f64>,
}

pub fn cluster(profiles: &[StudentProfile], k: usize, seed: u64) -> Result<ClusterAssignment, CohortError> {
    cluster_traced(profiles, k, seed, None).map(|t| t.assignment)
}

pub fn cluster_default(profiles: &[StudentProfile], seed: u64) -> Result<ClusterAssignment, CohortError> {
    cluster(profiles, DEFAULT_K, seed)
}

/// Lloyd iterations from k-means++ seeds until assignments stop changing or
/// [`MAX_ITERATIONS`] is hit. An empty cluster takes over the point farthest
/// from its own centre.
pub fn cluster_traced(
    profiles: &[StudentProfile],
    k: usize,
    seed: u64,
    mask: Option<&DimensionMask>,
) -> Result<ClusterTrace, CohortError> {
    if k == 0 {
        return Err(CohortError::ZeroK);
    }
    if k > profiles.len() {
        return Err(CohortError::KTooLarge { k, n: profiles.len() });
    }
    let full = DimensionMask::default();
    let m = &mask.unwrap_or(&full).0;
    if m.len() != DIM {
        return Err(CohortError::MaskLength(m.len()));
    }
    if !m.iter().any(|b| *b) {
        return Err(CohortError::EmptyMask);
    }
    let points: Vec<Vec<f64>> = profiles.iter().map(|p| vectorize(p).values).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = seed_centres(&points, k, m, &mut rng);
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        let mut costs = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centres, m, labels[i]);
            changed |= labels[i] != Some(j);
            labels[i] = Some(j);
            inertia += d;
            costs.push(d);
        }
        history.push(inertia);
        if !changed {
            break;
        }
        let assigned: Vec<usize> = labels.iter().map(|l| l.expect("assigned")).collect();
        let mut updated = means(&points, &assigned, k);
        let mut sizes = vec![0usize; k];
        assigned.iter().for_each(|&j| sizes[j] += 1);
        for j in 0..k {
            if updated[j].is_some() {
                continue;
            }
            // Farthest point from its centre, taken from a cluster that keeps
            // at least one member. One exists because k <= n.
            let far = (0..points.len())
                .filter(|&i| labels[i] == Some(assigned[i]) && sizes[assigned[i]] >= 2)
                .max_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(b.cmp(&a)))
                .expect("a cluster with two or more members exists");
            sizes[assigned[far]] -= 1;
            sizes[j] += 1;
            labels[far] = Some(j);
            costs[far] = 0.0;
            updated[j] = Some(points[far].clone());
        }
        centres = updated.into_iter().map(|c| c.expect("filled")).collect();
    }

    let assigned: Vec<usize> = labels.iter().map(|l| l.expect("assigned")).collect();
    let final_means = means(&points, &assigned, k);
    let centroids: Vec<Vec<f64>> = final_means
        .into_iter()
        .zip(&centres)
        .map(|(mean, centre)| mean.unwrap_or_else(|| centre.clone()))
        .collect();
    let inertia = points
        .iter()
        .zip(&assigned)
        .map(|(p, &j)| dist2(p, &centroids[j], m))
        .sum();
    Ok(ClusterTrace {
        assignment: ClusterAssignment {
            k,
            labels: profiles.iter().map(|p| p.id.clone()).zip(assigned).collect(),
            centroids,
            inertia,
            seed,
            iterations,
            mask: mask.cloned(),
        },
        inertia_history: history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub cluster: usize,
    pub size: usize,
    pub dominant_major: Major,
    pub dominant_share: f64,
    pub trait_means: BTreeMap<OrdinalAttr, f64>,
    pub knowledge_means: BTreeMap<OrdinalAttr, f64>,
    pub member_ids: Vec<String>,
}

/// One summary per non-empty cluster, in cluster order. Means are on the 1-5 scale.
pub fn summarize_groups(
    assignment: &ClusterAssignment,
    profiles: &[StudentProfile],
) -> Result<Vec<GroupSummary>, CohortError> {
    let mut groups: BTreeMap<usize, Vec<&StudentProfile>> = BTreeMap::new();
    for p in profiles {
        let c = assignment.labels.get(&p.id).ok_or_else(|| CohortError::Uncovered(p.id.clone()))?;
        groups.entry(*c).or_default().push(p);
    }
    Ok(groups
        .into_iter()
        .map(|(cluster, members)| {
            let n = members.len() as f64;
            let mean = |a: OrdinalAttr| members.iter().map(|p| p.level(a) as f64).sum::<f64>() / n;
            let mut counts: BTreeMap<&str, (usize, Major)> = BTreeMap::new();
            for p in &members {
                counts.entry(p.major.as_str()).or_insert((0, p.major)).0 += 1;
            }
            // Alphabetical iteration; only a strictly larger count takes the lead.
            let (_, &(count, dominant_major)) = counts
                .iter()
                .fold(None::<(&&str, &(usize, Major))>, |best, cur| match best {
                    Some(b) if b.1 .0 >= cur.1 .0 => Some(b),
                    _ => Some(cur),
                })
                .expect("clusters in the map are non-empty");
            GroupSummary {
                cluster,
                size: members.len(),
                dominant_major,
                dominant_share: count as f64 / n,
                trait_means: OrdinalAttr::TRAITS.iter().map(|a| (*a, mean(*a))).collect(),
                knowledge_means: OrdinalAttr::KNOWLEDGE.iter().map(|a| (*a, mean(*a))).collect(),
                member_ids: members.iter().map(|p| p.id.clone()).collect(),
            }
        })
        .collect())
}
