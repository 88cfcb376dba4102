//! Synthetic scene generator standing in for the room camera.
//!
//! Figures are rendered as filled silhouettes whose bounding-box aspect
//! encodes the pose: standing people are tall (h/w >= 2.5), sitting people
//! compact (h/w in [0.8, 1.6]), lying people wide (h/w <= 0.5). Scenes add
//! Gaussian sensor noise and a multiplicative illumination gain, and every
//! render is a pure function of (spec, seed).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{write_pgm, Frame, FrameError};
use crate::pose::{aggregate_votes, PoseLabel};
use crate::vision::Rect;

/// Canonical rendered frame size.
pub const SCENE_WIDTH: u32 = 128;
pub const SCENE_HEIGHT: u32 = 96;

/// First line of every dataset manifest.
pub const MANIFEST_HEADER: &str = "#hauar-manifest v1";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid figure {index}: {reason}")]
    InvalidFigure { index: usize, reason: String },
    #[error("figure {0} is entirely outside the frame")]
    FigureOutsideFrame(usize),
    #[error("figures {0} and {1} overlap more than 50% IoU")]
    FigureOverlap(usize, usize),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("manifest format: {0}")]
    ManifestFormat(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Body pose of a rendered figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePose {
    Sit,
    Stand,
    Lie,
}

impl FigurePose {
    pub fn label(self) -> PoseLabel {
        match self {
            FigurePose::Sit => PoseLabel::Sit,
            FigurePose::Stand => PoseLabel::Stand,
            FigurePose::Lie => PoseLabel::Lie,
        }
    }

    /// Nominal bounding box (w, h) in pixels at unit scale.
    fn base_size(self) -> (f64, f64) {
        match self {
            FigurePose::Stand => (16.0, 44.0),
            FigurePose::Sit => (22.0, 26.0),
            FigurePose::Lie => (44.0, 18.0),
        }
    }
}

/// One figure to render: pose, top-left anchor of its nominal box, scale,
/// and the fraction of the silhouette left visible (1 = whole figure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub pose: FigurePose,
    pub anchor_x: i32,
    pub anchor_y: i32,
    pub scale: f64,
    pub visible_fraction: f64,
}

impl FigureSpec {
    /// Nominal bounding box in frame coordinates, before visibility
    /// clipping.
    pub fn nominal_box(&self) -> (i64, i64, i64, i64) {
        let (w, h) = self.pose.base_size();
        let w = (w * self.scale).round() as i64;
        let h = (h * self.scale).round() as i64;
        (self.anchor_x as i64, self.anchor_y as i64, w.max(1), h.max(1))
    }

    fn validate(&self, index: usize) -> Result<(), SynthError> {
        if !(0.5..=1.5).contains(&self.scale) {
            return Err(SynthError::InvalidFigure {
                index,
                reason: format!("scale {} outside [0.5, 1.5]", self.scale),
            });
        }
        if !(self.visible_fraction > 0.0 && self.visible_fraction <= 1.0) {
            return Err(SynthError::InvalidFigure {
                index,
                reason: format!("visible_fraction {} outside (0, 1]", self.visible_fraction),
            });
        }
        Ok(())
    }
}

/// A full scene: zero or more figures over a flat background, with sensor
/// noise and illumination gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub figures: Vec<FigureSpec>,
    pub background_level: u8,
    pub noise_sigma: f64,
    pub illumination_gain: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self { figures: Vec::new(), background_level: 64, noise_sigma: 2.0, illumination_gain: 1.0 }
    }
}

/// What the generator knows about a rendered frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub label: PoseLabel,
    pub boxes: Vec<Rect>,
}

/// Renders a scene deterministically. Figures are drawn in list order,
/// then Gaussian noise is added, the illumination gain applied, and pixels
/// clamped to [0, 255]. Ground-truth boxes are tight to the rendered
/// silhouettes.
pub fn render_scene(spec: &SceneSpec, seed: u64) -> Result<(Frame, GroundTruth), SynthError> {
    if spec.illumination_gain <= 0.0 {
        return Err(SynthError::InvalidScene("illumination gain must be positive".into()));
    }
    if spec.noise_sigma < 0.0 {
        return Err(SynthError::InvalidScene("noise sigma must be non-negative".into()));
    }
    for (i, figure) in spec.figures.iter().enumerate() {
        figure.validate(i)?;
    }
    check_overlap(&spec.figures)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = vec![spec.background_level as f64; (SCENE_WIDTH * SCENE_HEIGHT) as usize];
    let mut boxes = Vec::with_capacity(spec.figures.len());
    for (i, figure) in spec.figures.iter().enumerate() {
        let intensity =
            (spec.background_level as f64 + 95.0 + rng.random_range(0.0..20.0)).min(255.0);
        let clip = VisibilityClip::draw(figure, &mut rng);
        let bbox = rasterize(figure, clip, intensity, &mut base)
            .ok_or(SynthError::FigureOutsideFrame(i))?;
        boxes.push(bbox);
    }

    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("finite sigma"))
    } else {
        None
    };
    let pixels = base
        .into_iter()
        .map(|v| {
            let n = noise.map(|d| d.sample(&mut rng)).unwrap_or(0.0);
            ((v + n) * spec.illumination_gain).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let frame = Frame::new(SCENE_WIDTH, SCENE_HEIGHT, pixels)?;

    let label = if boxes.is_empty() {
        PoseLabel::Empty
    } else {
        let votes: Vec<PoseLabel> = spec.figures.iter().map(|f| f.pose.label()).collect();
        aggregate_votes(&votes).0
    };
    Ok((frame, GroundTruth { label, boxes }))
}

fn check_overlap(figures: &[FigureSpec]) -> Result<(), SynthError> {
    for i in 0..figures.len() {
        for j in i + 1..figures.len() {
            let (ax, ay, aw, ah) = figures[i].nominal_box();
            let (bx, by, bw, bh) = figures[j].nominal_box();
            let ix = (ax + aw).min(bx + bw) - ax.max(bx);
            let iy = (ay + ah).min(by + bh) - ay.max(by);
            if ix <= 0 || iy <= 0 {
                continue;
            }
            let inter = (ix * iy) as f64;
            let union = (aw * ah + bw * bh) as f64 - inter;
            if inter / union > 0.5 {
                return Err(SynthError::FigureOverlap(i, j));
            }
        }
    }
    Ok(())
}

/// Which part of the silhouette stays visible.
#[derive(Debug, Clone, Copy)]
enum VisibilityClip {
    Full,
    KeepLeft(f64),
    KeepRight(f64),
    KeepTop(f64),
    KeepBottom(f64),
}

impl VisibilityClip {
    /// Standing and sitting figures lose a side, lying figures lose their
    /// top or bottom; the side is drawn from the scene rng.
    fn draw(figure: &FigureSpec, rng: &mut ChaCha8Rng) -> Self {
        if figure.visible_fraction >= 1.0 {
            return VisibilityClip::Full;
        }
        let vf = figure.visible_fraction;
        let first_side: bool = rng.random();
        match figure.pose {
            FigurePose::Stand | FigurePose::Sit => {
                if first_side {
                    VisibilityClip::KeepLeft(vf)
                } else {
                    VisibilityClip::KeepRight(vf)
                }
            }
            FigurePose::Lie => {
                if first_side {
                    VisibilityClip::KeepTop(vf)
                } else {
                    VisibilityClip::KeepBottom(vf)
                }
            }
        }
    }

    fn admits(&self, lx: f64, ly: f64, w: f64, h: f64) -> bool {
        match *self {
            VisibilityClip::Full => true,
            VisibilityClip::KeepLeft(vf) => lx <= w * vf,
            VisibilityClip::KeepRight(vf) => lx >= w * (1.0 - vf),
            VisibilityClip::KeepTop(vf) => ly <= h * vf,
            VisibilityClip::KeepBottom(vf) => ly >= h * (1.0 - vf),
        }
    }
}

/// Paints the figure into the base raster and returns the tight box of the
/// painted pixels, or `None` when nothing landed inside the frame.
fn rasterize(
    figure: &FigureSpec,
    clip: VisibilityClip,
    intensity: f64,
    base: &mut [f64],
) -> Option<Rect> {
    let (w, h) = figure.pose.base_size();
    let (w, h) = (w * figure.scale, h * figure.scale);
    let x0 = figure.anchor_x.max(0) as u32;
    let y0 = figure.anchor_y.max(0) as u32;
    let x1 = ((figure.anchor_x as f64 + w).ceil() as i64).clamp(0, SCENE_WIDTH as i64) as u32;
    let y1 = ((figure.anchor_y as f64 + h).ceil() as i64).clamp(0, SCENE_HEIGHT as i64) as u32;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (u32::MAX, u32::MAX, 0u32, 0u32);
    let mut painted = false;
    for py in y0..y1 {
        for px in x0..x1 {
            let lx = px as f64 + 0.5 - figure.anchor_x as f64;
            let ly = py as f64 + 0.5 - figure.anchor_y as f64;
            if !clip.admits(lx, ly, w, h) || !silhouette_hit(figure.pose, lx, ly, w, h) {
                continue;
            }
            base[(py * SCENE_WIDTH + px) as usize] = intensity;
            painted = true;
            min_x = min_x.min(px);
            min_y = min_y.min(py);
            max_x = max_x.max(px);
            max_y = max_y.max(py);
        }
    }
    if !painted {
        return None;
    }
    Some(Rect::new(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1))
}

/// Point-in-silhouette test in figure-local coordinates.
fn silhouette_hit(pose: FigurePose, lx: f64, ly: f64, w: f64, h: f64) -> bool {
    let ellipse = |cx: f64, cy: f64, rx: f64, ry: f64| -> bool {
        let dx = (lx - cx) / rx;
        let dy = (ly - cy) / ry;
        dx * dx + dy * dy <= 1.0
    };
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| -> bool {
        lx >= x0 && lx <= x1 && ly >= y0 && ly <= y1
    };
    match pose {
        FigurePose::Stand => {
            // Head on a tall body ellipse.
            ellipse(0.5 * w, 0.10 * h, 0.10 * h, 0.10 * h)
                || ellipse(0.5 * w, 0.60 * h, 0.5 * w, 0.40 * h)
        }
        FigurePose::Sit => {
            // L-profile: upright torso with head, thighs extending right,
            // shin dropping to the floor.
            ellipse(0.20 * w, 0.10 * h, 0.10 * h, 0.10 * h)
                || rect(0.0, 0.13 * h, 0.40 * w, 0.72 * h)
                || rect(0.0, 0.58 * h, w, 0.84 * h)
                || rect(0.80 * w, 0.58 * h, w, h)
        }
        FigurePose::Lie => {
            // Long horizontal body ellipse with the head at the left end.
            ellipse(0.56 * w, 0.5 * h, 0.44 * w, 0.5 * h)
                || ellipse(0.28 * h, 0.5 * h, 0.28 * h, 0.28 * h)
        }
    }
}

/// Per-label sample counts for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub empty: u32,
    pub sit: u32,
    pub stand: u32,
    pub lie: u32,
}

impl LabelCounts {
    pub fn total(&self) -> u32 {
        self.empty + self.sit + self.stand + self.lie
    }

    pub fn get(&self, label: PoseLabel) -> u32 {
        match label {
            PoseLabel::Empty => self.empty,
            PoseLabel::Sit => self.sit,
            PoseLabel::Stand => self.stand,
            PoseLabel::Lie => self.lie,
        }
    }
}

/// Scene difficulty mix for generated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    /// Low noise, full visibility, a single figure.
    Clean,
    /// Heavy noise, partial visibility, gain swings, multi-person scenes.
    Noisy,
}

impl Difficulty {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clean" => Some(Difficulty::Clean),
            "noisy" => Some(Difficulty::Noisy),
            _ => None,
        }
    }
}

/// One dataset sample: frame path relative to the manifest, plus its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: PoseLabel,
}

/// Index of a generated dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    counts: LabelCounts,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        let mut counts = LabelCounts::default();
        for entry in &entries {
            match entry.label {
                PoseLabel::Empty => counts.empty += 1,
                PoseLabel::Sit => counts.sit += 1,
                PoseLabel::Stand => counts.stand += 1,
                PoseLabel::Lie => counts.lie += 1,
            }
        }
        Self { entries, counts }
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn counts(&self) -> LabelCounts {
        self.counts
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for entry in &self.entries {
            out.push_str(&format!("{},{}\n", entry.path, entry.label));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header.trim() == MANIFEST_HEADER => {}
            other => {
                return Err(SynthError::ManifestFormat(format!(
                    "expected header {MANIFEST_HEADER:?}, found {other:?}"
                )))
            }
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (path, label) = line.rsplit_once(',').ok_or_else(|| {
                SynthError::ManifestFormat(format!("line {}: missing comma", lineno + 2))
            })?;
            let label = PoseLabel::parse(label.trim()).ok_or_else(|| {
                SynthError::ManifestFormat(format!("line {}: unknown label {label:?}", lineno + 2))
            })?;
            entries.push(ManifestEntry { path: path.trim().to_string(), label });
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// Renders and writes a labeled dataset under `out_dir` (frames in
/// `frames/`, index in `manifest.txt`). Per-sample seeds are `seed + index`
/// so generation is reproducible and parallelizable.
pub fn generate_dataset(
    counts: &LabelCounts,
    difficulty: Difficulty,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest, SynthError> {
    fs::create_dir_all(out_dir.join("frames"))?;
    let mut entries = Vec::with_capacity(counts.total() as usize);
    let mut index = 0u64;
    for label in PoseLabel::ALL {
        for label_idx in 0..counts.get(label) {
            let sample_seed = seed.wrapping_add(index);
            let spec = sample_scene(label, difficulty, sample_seed);
            let (frame, truth) = render_scene(&spec, render_seed(sample_seed))?;
            debug_assert_eq!(truth.label, label);
            let name = format!("frames/{}_{:04}.pgm", label, label_idx);
            fs::write(out_dir.join(&name), write_pgm(&frame))?;
            entries.push(ManifestEntry { path: name, label });
            index += 1;
        }
    }
    let manifest = DatasetManifest::new(entries);
    manifest.save(&out_dir.join("manifest.txt"))?;
    Ok(manifest)
}

/// Separate stream for the renderer so scene parameter draws and pixel
/// noise draws never alias.
fn render_seed(sample_seed: u64) -> u64 {
    sample_seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Draws the scene parameters for one sample of the given label.
pub fn sample_scene(label: PoseLabel, difficulty: Difficulty, sample_seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let (noise_sigma, illumination_gain, background_level) = match difficulty {
        Difficulty::Clean => (
            rng.random_range(1.0..4.0),
            rng.random_range(0.85..1.15),
            rng.random_range(45..=90) as u8,
        ),
        Difficulty::Noisy => (
            rng.random_range(4.0..20.0),
            rng.random_range(0.6..1.4),
            rng.random_range(40..=95) as u8,
        ),
    };
    let mut figures = Vec::new();
    if let Some(pose) = figure_pose(label) {
        let count = match difficulty {
            Difficulty::Clean => 1,
            Difficulty::Noisy => {
                if rng.random_range(0.0..1.0) < 0.25 {
                    2
                } else {
                    1
                }
            }
        };
        for _ in 0..count {
            let scale = match difficulty {
                Difficulty::Clean => rng.random_range(1.0..1.4),
                Difficulty::Noisy => rng.random_range(0.95..1.45),
            };
            let visible_fraction = match difficulty {
                Difficulty::Clean => 1.0,
                Difficulty::Noisy => {
                    if rng.random_range(0.0..1.0) < 0.35 {
                        rng.random_range(0.5..1.0)
                    } else {
                        1.0
                    }
                }
            };
            let placed = place_figure(pose, scale, visible_fraction, &figures, &mut rng);
            if let Some(figure) = placed {
                figures.push(figure);
            }
        }
        if figures.is_empty() {
            // Multi-figure placement can fail; a labeled sample must still
            // contain at least one figure, so fall back to a centered one.
            let (w, h) = pose.base_size();
            figures.push(FigureSpec {
                pose,
                anchor_x: ((SCENE_WIDTH as f64 - w) / 2.0) as i32,
                anchor_y: ((SCENE_HEIGHT as f64 - h) / 2.0) as i32,
                scale: 1.0,
                visible_fraction: 1.0,
            });
        }
    }
    SceneSpec { figures, background_level, noise_sigma, illumination_gain }
}

fn figure_pose(label: PoseLabel) -> Option<FigurePose> {
    match label {
        PoseLabel::Empty => None,
        PoseLabel::Sit => Some(FigurePose::Sit),
        PoseLabel::Stand => Some(FigurePose::Stand),
        PoseLabel::Lie => Some(FigurePose::Lie),
    }
}

/// Draws an anchor that keeps the figure fully inside the frame and well
/// clear of already-placed figures. Gives up after a bounded number of
/// tries so generation always terminates.
fn place_figure(
    pose: FigurePose,
    scale: f64,
    visible_fraction: f64,
    placed: &[FigureSpec],
    rng: &mut ChaCha8Rng,
) -> Option<FigureSpec> {
    let (bw, bh) = pose.base_size();
    let w = (bw * scale).round() as i32;
    let h = (bh * scale).round() as i32;
    let max_x = SCENE_WIDTH as i32 - 2 - w;
    let max_y = SCENE_HEIGHT as i32 - 2 - h;
    if max_x < 2 || max_y < 2 {
        return None;
    }
    for _ in 0..30 {
        let candidate = FigureSpec {
            pose,
            anchor_x: rng.random_range(2..=max_x),
            anchor_y: rng.random_range(2..=max_y),
            scale,
            visible_fraction,
        };
        // Figures must sit farther apart than the detection window can
        // reach, or a window straddling the gap would see both people and
        // the box refinement would merge them into one detection.
        let separated = placed.iter().all(|other| {
            let (ax, ay, aw, ah) = candidate.nominal_box();
            let (bx, by, bw, bh) = other.nominal_box();
            let gap = 28;
            (ax + aw + gap <= bx) || (bx + bw + gap <= ax) || (ay + ah + gap <= by) || (by + bh + gap <= ay)
        });
        if separated {
            return Some(candidate);
        }
    }
    None
}
