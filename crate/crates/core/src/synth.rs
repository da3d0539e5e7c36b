//! Deterministic synthetic scenarios: paired detection streams and ground truth with
//! scripted occlusions, exits and re-entries, per-identity face embeddings and
//! sampled face quality.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::fbtr::QualityClass;
use crate::geometry::{BBox, QualityAttrs};
use crate::ingest::{DetectionRecord, FrameIndex, GroundTruth, GtEntry};

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: FrameIndex,
    pub end: FrameIndex,
}

impl Window {
    pub fn new(start: FrameIndex, end: FrameIndex) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, frame: FrameIndex) -> bool {
        (self.start..self.end).contains(&frame)
    }

    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: FrameIndex,
    pub x: f64,
    pub y: f64,
}

/// Path of the face centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    /// Centre at `start + velocity * frame`.
    Linear { start: [f64; 2], velocity: [f64; 2] },
    /// Piecewise-linear between waypoints (sorted by frame), held constant outside them.
    Waypoints(Vec<Waypoint>),
}

impl Trajectory {
    pub fn center(&self, frame: FrameIndex) -> (f64, f64) {
        match self {
            Trajectory::Linear { start, velocity } => {
                let t = frame as f64;
                (start[0] + velocity[0] * t, start[1] + velocity[1] * t)
            }
            Trajectory::Waypoints(points) => {
                let i = points.partition_point(|p| p.frame <= frame);
                if i == 0 {
                    return (points[0].x, points[0].y);
                }
                let a = &points[i - 1];
                let Some(b) = points.get(i) else {
                    return (a.x, a.y);
                };
                let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
                (a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWindow {
    pub start: FrameIndex,
    pub end: FrameIndex,
    pub class: QualityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {
    /// Ground-truth label; defaults to `p<index>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Face box side in pixels.
    #[serde(default = "default_face_size")]
    pub size: f64,
    pub trajectory: Trajectory,
    /// Frames the identity exists in; defaults to the whole scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Window>,
    /// In the scene but hidden: no detection; ground truth per `occluded_ground_truth`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub occlusions: Vec<Window>,
    /// Out of the scene: neither detection nor ground truth.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exits: Vec<Window>,
    /// Forces the sampled face quality class inside each window.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quality_windows: Vec<QualityWindow>,
}

fn default_face_size() -> f64 {
    64.0
}

impl IdentitySpec {
    pub fn linear(start: [f64; 2], velocity: [f64; 2]) -> Self {
        Self {
            label: None,
            size: default_face_size(),
            trajectory: Trajectory::Linear { start, velocity },
            span: None,
            occlusions: Vec::new(),
            exits: Vec::new(),
            quality_windows: Vec::new(),
        }
    }

    fn in_scene(&self, frame: FrameIndex) -> bool {
        self.span.is_none_or(|s| s.contains(frame)) && !self.exits.iter().any(|w| w.contains(frame))
    }

    fn occluded(&self, frame: FrameIndex) -> bool {
        self.occlusions.iter().any(|w| w.contains(frame))
    }

    fn forced_quality(&self, frame: FrameIndex) -> Option<QualityClass> {
        self.quality_windows
            .iter()
            .rev()
            .find(|w| (w.start..w.end).contains(&frame))
            .map(|w| w.class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccludedGroundTruth {
    /// No annotation while a face is hidden.
    #[default]
    Suspended,
    Annotated,
}

/// Mixture weights over quality classes for frames without a forced class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub enrollable: f64,
    pub verifiable: f64,
    pub discarded: f64,
}

impl Default for QualityProfile {
    fn default() -> Self {
        Self {
            enrollable: 0.6,
            verifiable: 0.3,
            discarded: 0.1,
        }
    }
}

impl QualityProfile {
    fn sample_class(&self, rng: &mut impl Rng) -> QualityClass {
        let total = self.enrollable + self.verifiable + self.discarded;
        let u = rng.random::<f64>() * total;
        if u < self.enrollable {
            QualityClass::Enrollable
        } else if u < self.enrollable + self.verifiable {
            QualityClass::Verifiable
        } else {
            QualityClass::Discarded
        }
    }
}

/// Quality attributes that land in `class` under the default gates.
pub fn sample_quality(class: QualityClass, rng: &mut impl Rng) -> QualityAttrs {
    let (conf, angle, blur) = match class {
        QualityClass::Enrollable => ((0.96, 1.0), 20.0, (0.91, 1.0)),
        QualityClass::Verifiable => ((0.82, 0.94), 50.0, (0.76, 0.89)),
        QualityClass::Discarded => ((0.3, 0.75), 80.0, (0.2, 0.7)),
    };
    QualityAttrs {
        det_confidence: rng.random_range(conf.0..=conf.1),
        yaw: rng.random_range(-angle..=angle),
        pitch: rng.random_range(-angle..=angle),
        roll: rng.random_range(-angle..=angle),
        blur: rng.random_range(blur.0..=blur.1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub frame_count: u64,
    pub arena: Arena,
    pub embedding_dim: usize,
    /// Minimum angle between any two identity base embeddings, in degrees.
    pub identity_separation_deg: f64,
    /// Per-component standard deviation of the noise added to base embeddings.
    pub noise_sigma: f64,
    #[serde(default)]
    pub occluded_ground_truth: OccludedGroundTruth,
    #[serde(default)]
    pub quality: QualityProfile,
    pub identities: Vec<IdentitySpec>,
}

impl ScenarioConfig {
    pub fn num_identities(&self) -> usize {
        self.identities.len()
    }

    pub fn label(&self, index: usize) -> String {
        self.identities[index]
            .label
            .clone()
            .unwrap_or_else(|| format!("p{index:02}"))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(format!("scenario `{}`: {m}", self.name)));
        if self.embedding_dim == 0 {
            return err("embedding_dim must be positive".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return err("noise_sigma must be non-negative".into());
        }
        if !(0.0..=180.0).contains(&self.identity_separation_deg) {
            return err("identity_separation_deg must be in [0, 180]".into());
        }
        let q = &self.quality;
        if [q.enrollable, q.verifiable, q.discarded]
            .iter()
            .any(|w| w.is_nan() || *w < 0.0)
            || q.enrollable + q.verifiable + q.discarded <= 0.0
        {
            return err("quality weights must be non-negative with a positive sum".into());
        }
        let mut labels = std::collections::HashSet::new();
        for (i, id) in self.identities.iter().enumerate() {
            if !(id.size.is_finite() && id.size > 0.0) {
                return err(format!("identity {i}: size must be positive"));
            }
            if !labels.insert(self.label(i)) {
                return err(format!("identity {i}: duplicate label `{}`", self.label(i)));
            }
            let windows = id
                .occlusions
                .iter()
                .chain(&id.exits)
                .copied()
                .chain(id.span)
                .chain(
                    id.quality_windows
                        .iter()
                        .map(|w| Window::new(w.start, w.end)),
                );
            for w in windows {
                if w.start > w.end || w.end > self.frame_count {
                    return err(format!(
                        "identity {i}: window [{}, {}) outside [0, {})",
                        w.start, w.end, self.frame_count
                    ));
                }
            }
            if let Trajectory::Waypoints(points) = &id.trajectory {
                if points.is_empty() || points.windows(2).any(|p| p[0].frame >= p[1].frame) {
                    return err(format!(
                        "identity {i}: waypoints must be non-empty with increasing frames"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of distinct identities a perfect tracker would report.
    pub fn expected_track_count(&self) -> usize {
        self.identities
            .iter()
            .filter(|id| (0..self.frame_count).any(|f| id.in_scene(f) && !id.occluded(f)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub detections: Vec<DetectionRecord>,
    pub ground_truth: GroundTruth,
    pub frame_count: u64,
}

impl Scenario {
    /// Mean detections per frame.
    pub fn density(&self) -> f64 {
        if self.frame_count == 0 {
            0.0
        } else {
            self.detections.len() as f64 / self.frame_count as f64
        }
    }
}

/// Per-component noise level at which two noisy copies of the same base vector have
/// expected cosine similarity close to `target`.
pub fn noise_sigma_for_similarity(target: f64, dim: usize) -> f64 {
    ((1.0 / target - 1.0) / dim as f64).sqrt()
}

fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-12 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit base vectors with pairwise cosine at most `cos(separation)`. Up to `dim`
/// identities are orthonormal (or a regular simplex when the separation exceeds
/// 90 degrees); beyond that, random directions are accepted greedily.
pub fn identity_bases(
    count: usize,
    dim: usize,
    separation_deg: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    let max_cos = separation_deg.to_radians().cos();
    let infeasible = || {
        Error::Config(format!(
            "cannot place {count} identities {separation_deg} degrees apart in {dim} dimensions"
        ))
    };
    if count <= dim {
        let mut bases: Vec<Vec<f64>> = Vec::with_capacity(count);
        while bases.len() < count {
            let mut v = gaussian_vector(dim, rng);
            for b in &bases {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            if normalize(&mut v) {
                bases.push(v);
            }
        }
        if max_cos >= 0.0 - 1e-12 || count < 2 {
            return Ok(bases);
        }
        // Centre the orthonormal set to spread it into a regular simplex.
        if max_cos < -1.0 / (count as f64 - 1.0) - 1e-12 {
            return Err(infeasible());
        }
        let mean: Vec<f64> = (0..dim)
            .map(|j| bases.iter().map(|b| b[j]).sum::<f64>() / count as f64)
            .collect();
        for b in &mut bases {
            b.iter_mut().zip(&mean).for_each(|(x, m)| *x -= m);
            normalize(b);
        }
        return Ok(bases);
    }
    if max_cos < 0.0 {
        return Err(infeasible());
    }
    let mut bases: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..10_000 {
            let mut v = gaussian_vector(dim, rng);
            if !normalize(&mut v) {
                continue;
            }
            if bases.iter().all(|b| dot(&v, b) <= max_cos) {
                bases.push(v);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(infeasible());
        }
    }
    Ok(bases)
}

/// Builds the detection stream and ground truth for `config`. Output depends only on
/// the config (including its seed).
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bases = identity_bases(
        config.num_identities(),
        config.embedding_dim,
        config.identity_separation_deg,
        &mut rng,
    )?;
    let labels: Vec<String> = (0..config.num_identities())
        .map(|i| config.label(i))
        .collect();

    let mut detections = Vec::new();
    let mut gt_entries = Vec::new();
    for frame in 0..config.frame_count {
        let mut det_id = 0u32;
        for (i, id) in config.identities.iter().enumerate() {
            if !id.in_scene(frame) {
                continue;
            }
            let (cx, cy) = id.trajectory.center(frame);
            let bbox = BBox::from_center(cx, cy, id.size, id.size)?;
            let hidden = id.occluded(frame);
            if !hidden || config.occluded_ground_truth == OccludedGroundTruth::Annotated {
                gt_entries.push(GtEntry {
                    frame,
                    identity: labels[i].clone(),
                    bbox,
                });
            }
            if hidden {
                continue;
            }
            let class = id
                .forced_quality(frame)
                .unwrap_or_else(|| config.quality.sample_class(&mut rng));
            let quality = sample_quality(class, &mut rng);
            let mut values: Vec<f64> = bases[i]
                .iter()
                .map(|b| {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    b + config.noise_sigma * n
                })
                .collect();
            normalize(&mut values);
            detections.push(DetectionRecord {
                frame,
                det_id,
                bbox,
                quality,
                embedding: Some(Embedding::new(values)?),
            });
            det_id += 1;
        }
    }
    Ok(Scenario {
        name: config.name.clone(),
        detections,
        ground_truth: GroundTruth::new(gt_entries)?,
        frame_count: config.frame_count,
    })
}

const HD: Arena = Arena {
    width: 1920.0,
    height: 1080.0,
};

fn base(name: &str, frame_count: u64, dim: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        seed: 7,
        frame_count,
        arena: HD,
        embedding_dim: dim,
        identity_separation_deg: 60.0,
        noise_sigma: noise_sigma_for_similarity(0.92, dim),
        occluded_ground_truth: OccludedGroundTruth::Suspended,
        quality: QualityProfile::default(),
        identities: Vec::new(),
    }
}

fn forced(start: u64, end: u64, class: QualityClass) -> QualityWindow {
    QualityWindow { start, end, class }
}

fn labelled(label: &str, mut spec: IdentitySpec) -> IdentitySpec {
    spec.label = Some(label.into());
    spec
}

/// One face hidden for longer than the default death horizon, enrollable before the
/// gap and only identifiable some frames after it; a second face walks undisturbed.
fn fig3() -> ScenarioConfig {
    let mut c = base("FIG3", 100, 128);
    let mut a = labelled("A", IdentitySpec::linear([400.0, 300.0], [2.0, 1.0]));
    a.occlusions = vec![Window::new(40, 60)];
    a.quality_windows = vec![
        forced(0, 40, QualityClass::Enrollable),
        forced(60, 66, QualityClass::Discarded),
        forced(66, 100, QualityClass::Verifiable),
    ];
    let b = labelled("B", IdentitySpec::linear([1300.0, 300.0], [-1.0, 1.5]));
    c.identities = vec![a, b];
    c
}

/// Same layout as FIG3 but the hidden face never reaches enrollment quality before
/// the gap.
fn no_enroll() -> ScenarioConfig {
    let mut c = fig3();
    c.name = "NO-ENROLL".into();
    c.identities[0].quality_windows = vec![
        forced(0, 40, QualityClass::Verifiable),
        forced(60, 66, QualityClass::Discarded),
        forced(66, 100, QualityClass::Verifiable),
    ];
    c
}

/// Three people who each leave and come back twice, re-entering somewhere else, with
/// a few short detector dropouts along the way.
fn reentry() -> ScenarioConfig {
    let mut c = base("REENTRY", 300, 128);
    let lanes = [(300.0, 200.0), (900.0, 250.0), (1500.0, 200.0)];
    for (i, &(x, y)) in lanes.iter().enumerate() {
        let offset = 10 * i as u64;
        let exit1 = Window::new(80 + offset, 110 + offset);
        let exit2 = Window::new(190 + offset, 222 + offset);
        let wp = |frame: u64, dx: f64, dy: f64| Waypoint {
            frame,
            x: x + dx,
            y: y + dy,
        };
        let mut spec = IdentitySpec::linear([x, y], [0.0, 0.0]);
        spec.trajectory = Trajectory::Waypoints(vec![
            wp(0, 0.0, 0.0),
            wp(exit1.start - 1, 60.0, 120.0),
            wp(exit1.end, -80.0, 20.0),
            wp(exit2.start - 1, 0.0, 200.0),
            wp(exit2.end, 90.0, 60.0),
            wp(299, 120.0, 300.0),
        ]);
        spec.exits = vec![exit1, exit2];
        spec.occlusions = vec![
            Window::new(30 + offset, 34 + offset),
            Window::new(140 + offset, 143 + offset),
            Window::new(250 + offset, 255 + offset),
        ];
        spec.quality_windows = vec![
            forced(0, 12, QualityClass::Enrollable),
            forced(exit1.end, exit1.end + 6, QualityClass::Discarded),
            forced(exit2.end, exit2.end + 6, QualityClass::Discarded),
        ];
        c.identities.push(labelled(&format!("R{i}"), spec));
    }
    c
}

/// Two faces walking through each other on the same row.
fn crossover() -> ScenarioConfig {
    let mut c = base("CROSSOVER", 40, 128);
    let a = labelled("A", IdentitySpec::linear([130.0, 300.0], [10.0, 0.0]));
    let b = labelled("B", IdentitySpec::linear([520.0, 300.0], [-10.0, 0.0]));
    c.quality = QualityProfile {
        enrollable: 1.0,
        verifiable: 0.0,
        discarded: 0.0,
    };
    c.identities = vec![a, b];
    c
}

/// Sixteen people on a 4x4 grid drifting toward the camera, about 13 visible faces
/// per frame, mixing short dropouts, long occlusions, exits and late arrivals.
fn crowd() -> ScenarioConfig {
    let mut c = base("CROWD", 300, 128);
    for row in 0..4u64 {
        for col in 0..4u64 {
            let i = row * 4 + col;
            let x = 240.0 + 480.0 * col as f64;
            let y = 120.0 + 250.0 * row as f64;
            let vx = if col % 2 == 0 { 0.3 } else { -0.3 };
            let mut spec = IdentitySpec::linear([x, y], [vx, 0.25]);
            let shift = 7 * i;
            match i % 4 {
                0 => {
                    spec.occlusions = vec![
                        Window::new(40 + shift, 44 + shift),
                        Window::new(150 + shift, 153 + shift),
                    ];
                }
                1 => {
                    spec.occlusions = vec![
                        Window::new(60 + shift, 63 + shift),
                        Window::new(120 + shift, 150 + shift),
                    ];
                    spec.quality_windows = vec![
                        forced(0, 10, QualityClass::Enrollable),
                        forced(150 + shift, 156 + shift, QualityClass::Discarded),
                    ];
                }
                2 => {
                    let exit = Window::new(100 + shift / 2, 135 + shift / 2);
                    spec.trajectory = Trajectory::Waypoints(vec![
                        Waypoint { frame: 0, x, y },
                        Waypoint {
                            frame: exit.start - 1,
                            x: x + 30.0,
                            y: y + 25.0,
                        },
                        Waypoint {
                            frame: exit.end,
                            x: x - 90.0,
                            y: y + 10.0,
                        },
                        Waypoint {
                            frame: 299,
                            x: x - 40.0,
                            y: y + 60.0,
                        },
                    ]);
                    spec.exits = vec![exit];
                    spec.occlusions = vec![Window::new(200 + shift / 2, 203 + shift / 2)];
                    spec.quality_windows = vec![
                        forced(0, 10, QualityClass::Enrollable),
                        forced(exit.end, exit.end + 5, QualityClass::Discarded),
                    ];
                }
                _ => {
                    spec.span = Some(Window::new(20 + shift, 300));
                    spec.occlusions = vec![Window::new(180, 184)];
                }
            }
            c.identities.push(labelled(&format!("C{i:02}"), spec));
        }
    }
    c
}

pub const FIXTURE_NAMES: [&str; 5] = ["FIG3", "NO-ENROLL", "REENTRY", "CROSSOVER", "CROWD"];

/// All scripted scenarios, in [`FIXTURE_NAMES`] order.
pub fn scripted_fixtures() -> Vec<ScenarioConfig> {
    vec![fig3(), no_enroll(), reentry(), crossover(), crowd()]
}

pub fn fixture(name: &str) -> Option<ScenarioConfig> {
    scripted_fixtures()
        .into_iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
}

/// Bounds for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScenarioOptions {
    pub max_identities: usize,
    pub max_frames: u64,
    pub embedding_dim: usize,
    /// Keep every face in its own horizontal lane so boxes never overlap.
    pub separate_lanes: bool,
}

impl Default for RandomScenarioOptions {
    fn default() -> Self {
        Self {
            max_identities: 5,
            max_frames: 50,
            embedding_dim: 32,
            separate_lanes: false,
        }
    }
}

/// Randomized scenario drawn from `seed`: faces with random motion, random occlusions
/// and exits, and random quality windows.
pub fn random_scenario(seed: u64, opts: &RandomScenarioOptions) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    let frames = rng.random_range(opts.max_frames.clamp(1, 10)..=opts.max_frames.max(1));
    let n = rng.random_range(1..=opts.max_identities.max(1));
    let mut c = base(&format!("RANDOM-{seed}"), frames, opts.embedding_dim);
    c.seed = seed;
    c.noise_sigma = noise_sigma_for_similarity(0.92, opts.embedding_dim);
    let mut lanes: Vec<usize> = (0..n).collect();
    lanes.shuffle(&mut rng);
    let random_window = |rng: &mut ChaCha8Rng, max_len: u64| {
        let start = rng.random_range(0..frames);
        let end = (start + rng.random_range(1..=max_len)).min(frames);
        Window::new(start, end)
    };
    for (i, lane) in lanes.into_iter().enumerate() {
        let size = rng.random_range(40.0..80.0);
        let y = if opts.separate_lanes {
            100.0 + 150.0 * lane as f64
        } else {
            rng.random_range(100.0..500.0)
        };
        let start = [rng.random_range(100.0..1500.0), y];
        let velocity = [
            rng.random_range(-12.0..12.0),
            if opts.separate_lanes {
                0.0
            } else {
                rng.random_range(-4.0..4.0)
            },
        ];
        let mut spec = IdentitySpec::linear(start, velocity);
        spec.size = size;
        spec.label = Some(format!("id{i}"));
        if rng.random_bool(0.8) {
            let a = rng.random_range(0..frames);
            let b = rng.random_range(0..frames);
            spec.span = Some(Window::new(a.min(b), a.max(b) + 1));
        }
        for _ in 0..rng.random_range(0..3) {
            spec.occlusions.push(random_window(&mut rng, 15));
        }
        if rng.random_bool(0.3) {
            spec.exits.push(random_window(&mut rng, 20));
        }
        for _ in 0..rng.random_range(0..3) {
            let w = random_window(&mut rng, 20);
            let class = [
                QualityClass::Enrollable,
                QualityClass::Verifiable,
                QualityClass::Discarded,
            ][rng.random_range(0..3)];
            spec.quality_windows.push(forced(w.start, w.end, class));
        }
        c.identities.push(spec);
    }
    c
}

/// Faces in separate lanes, each hidden once for `gap` frames in mid-track. Faces are
/// enrollable for the first frames and identifiable again a few frames after the gap.
pub fn long_gap_scenario(seed: u64, gap: u64, embedding_dim: usize) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.random_range(3..=5usize);
    let frames = 60 + gap + rng.random_range(0..40);
    let mut c = base(&format!("LONG-GAP-{seed}"), frames, embedding_dim);
    c.seed = seed;
    for i in 0..n {
        let y = 120.0 + 180.0 * i as f64;
        let x = rng.random_range(200.0..1400.0);
        let vx = rng.random_range(-2.0..2.0);
        let mut spec = IdentitySpec::linear([x, y], [vx, rng.random_range(-0.5..0.5)]);
        spec.label = Some(format!("g{i}"));
        let start = rng.random_range(20..frames - gap - 15);
        spec.occlusions = vec![Window::new(start, start + gap)];
        let back = start + gap;
        spec.quality_windows = vec![
            forced(0, 8, QualityClass::Enrollable),
            forced(back, back + rng.random_range(0..5), QualityClass::Discarded),
        ];
        c.identities.push(spec);
    }
    c
}
