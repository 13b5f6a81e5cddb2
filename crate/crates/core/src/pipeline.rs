//! Deterministic batch orchestration: generate, augment, evaluate.
//!
//! Every batch item gets a stable seed derived from the master seed, the
//! dataset name, and the item index. Items run on a worker pool (capped by
//! `DGSSA_THREADS`) but results are committed in index order, so output bytes
//! do not depend on the thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colonize::{ColonizeError, GrowthParams};
use crate::config::PipelineConfig;
use crate::image::{BinaryMask, GrayImage, RgbImage};
use crate::io::{self, IoError};
use crate::losses::ScoreMap;
use crate::metrics::{
    self, auc_roc, basic_metrics, confusion, dsc_partitioned, error_overlay, MetricsError,
};
use crate::raster::{self, RasterError};
use crate::seed::derive_seed;
use crate::styleaug::{pixmix, StyleError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Colonize(#[from] ColonizeError),
    #[error(transparent)]
    Style(#[from] StyleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("dataset {dataset:?} has no ROI paths; `gen` needs one per entry or a global ROI")]
    MissingRoi { dataset: String },
    #[error("unmatched files; only in prediction dir: {only_pred:?}, only in ground-truth dir: {only_gt:?}")]
    MissingPair {
        only_pred: Vec<String>,
        only_gt: Vec<String>,
    },
    #[error("no ROI file named {name:?} in {dir}")]
    MissingRoiFile { name: String, dir: String },
    #[error("mixer source {0} has no PNG images")]
    NoMixers(String),
    #[error("DGSSA_THREADS={0:?} is not a positive integer")]
    InvalidThreads(String),
}

fn file_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Worker pool honoring `DGSSA_THREADS`.
fn thread_pool() -> Result<rayon::ThreadPool, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DGSSA_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or(PipelineError::InvalidThreads(v))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| PipelineError::Manifest {
            path: "<thread pool>".into(),
            message: e.to_string(),
        })
}

// --- Manifests ---

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<PathBuf>,
}

/// One dataset: a name and its image/mask/ROI file triples. Relative paths
/// are resolved against the manifest file's directory at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| PipelineError::Manifest {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut manifest.entries {
            entry.image = resolve(base, &entry.image);
            entry.mask = entry.mask.take().map(|p| resolve(base, &p));
            entry.roi = entry.roi.take().map(|p| resolve(base, &p));
        }
        manifest.validate(path)?;
        Ok(manifest)
    }

    /// Paths must exist and per-entry dimensions must agree across
    /// image/mask/ROI.
    fn validate(&self, manifest_path: &Path) -> Result<(), PipelineError> {
        for entry in &self.entries {
            let image_dims = io::png_dimensions(&entry.image)?;
            for extra in [&entry.mask, &entry.roi].into_iter().flatten() {
                let dims = io::png_dimensions(extra)?;
                if dims != image_dims {
                    return Err(PipelineError::Manifest {
                        path: manifest_path.display().to_string(),
                        message: format!(
                            "{} is {}x{} but {} is {}x{}",
                            entry.image.display(),
                            image_dims.0,
                            image_dims.1,
                            extra.display(),
                            dims.0,
                            dims.1
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

// --- Run log ---

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub path: String,
    pub seed: u64,
}

/// Deterministic record of a batch run: every emitted file and the seed that
/// reproduces it. Timings go to stderr, not here, so reruns are byte-identical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunLog {
    pub command: String,
    pub master_seed: u64,
    pub files: Vec<RunLogEntry>,
}

impl RunLog {
    fn write(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let path = out_dir.join("run_log.json");
        let text = serde_json::to_string_pretty(self).expect("run log serialization");
        fs::write(&path, text).map_err(|e| file_err(&path, e))?;
        Ok(())
    }
}

// --- gen ---

/// Generates `masks_per_dataset` structure masks per dataset, plus the tree
/// JSON for each, cycling through the dataset's ROI files. An explicit
/// `global_roi` overrides the per-entry ROIs.
pub fn run_gen(
    manifests: &[DatasetManifest],
    cfg: &PipelineConfig,
    out_dir: &Path,
    global_roi: Option<&Path>,
) -> Result<RunLog, PipelineError> {
    fs::create_dir_all(out_dir).map_err(|e| file_err(out_dir, e))?;

    struct Task {
        dataset: String,
        index: usize,
        roi: PathBuf,
        seed: u64,
    }
    let mut tasks = Vec::new();
    for manifest in manifests {
        let rois: Vec<PathBuf> = match global_roi {
            Some(p) => vec![p.to_path_buf()],
            None => manifest
                .entries
                .iter()
                .filter_map(|e| e.roi.clone())
                .collect(),
        };
        if rois.is_empty() && cfg.masks_per_dataset > 0 {
            return Err(PipelineError::MissingRoi {
                dataset: manifest.name.clone(),
            });
        }
        for index in 0..cfg.masks_per_dataset {
            tasks.push(Task {
                dataset: manifest.name.clone(),
                index,
                roi: rois[index % rois.len()].clone(),
                seed: derive_seed(cfg.master_seed, &format!("{}/gen", manifest.name), index as u64),
            });
        }
    }

    let mut roi_cache: BTreeMap<PathBuf, BinaryMask> = BTreeMap::new();
    for task in &tasks {
        if !roi_cache.contains_key(&task.roi) {
            roi_cache.insert(task.roi.clone(), io::read_mask_png(&task.roi)?);
        }
    }

    let post = cfg.postprocess();
    let pool = thread_pool()?;
    let results: Vec<Result<(String, Vec<u8>, String, String, u64), PipelineError>> =
        pool.install(|| {
            tasks
                .par_iter()
                .map(|task| {
                    let roi = &roi_cache[&task.roi];
                    let growth = GrowthParams {
                        seed: task.seed,
                        ..cfg.growth
                    };
                    let (mask, tree) = raster::make_structure_mask_with_tree(
                        roi,
                        &growth,
                        cfg.attractor_count,
                        &post,
                    )?;
                    let stem = format!("{}_gen_{:04}", task.dataset, task.index);
                    Ok((
                        format!("{stem}.png"),
                        io::mask_png_bytes(&mask),
                        format!("{stem}.json"),
                        io::tree_to_json(&tree),
                        task.seed,
                    ))
                })
                .collect()
        });

    let mut log = RunLog {
        command: "gen".into(),
        master_seed: cfg.master_seed,
        files: Vec::new(),
    };
    for result in results {
        let (png_name, png_bytes, json_name, json_text, seed) = result?;
        let png_path = out_dir.join(&png_name);
        fs::write(&png_path, png_bytes).map_err(|e| file_err(&png_path, e))?;
        let json_path = out_dir.join(&json_name);
        fs::write(&json_path, json_text).map_err(|e| file_err(&json_path, e))?;
        log.files.push(RunLogEntry {
            path: png_name,
            seed,
        });
        log.files.push(RunLogEntry {
            path: json_name,
            seed,
        });
    }
    log.write(out_dir)?;
    Ok(log)
}

// --- augment ---

/// Where PixMix mixer images come from.
#[derive(Clone, Debug)]
pub enum MixerSource {
    /// Every PNG in a directory.
    Directory(PathBuf),
    /// The other images of the dataset itself.
    SelfMode,
}

fn sorted_pngs(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| file_err(dir, e))? {
        let entry = entry.map_err(|e| file_err(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn resize_rgb(img: &image::RgbImage, w: u32, h: u32) -> RgbImage {
    let resized = if img.dimensions() == (w, h) {
        img.clone()
    } else {
        image::imageops::resize(img, w, h, image::imageops::FilterType::Triangle)
    };
    RgbImage::from_data(
        w,
        h,
        resized
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect(),
    )
}

fn load_rgb8(path: &Path) -> Result<image::RgbImage, PipelineError> {
    Ok(image::open(path)
        .map_err(|e| PipelineError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .into_rgb8())
}

/// Applies PixMix to every manifest image; labels are copied through
/// unchanged. Outputs keep the source stem plus `_aug`.
pub fn run_augment(
    manifest: &DatasetManifest,
    mixers: &MixerSource,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<RunLog, PipelineError> {
    fs::create_dir_all(out_dir).map_err(|e| file_err(out_dir, e))?;

    let mixer_images: Vec<image::RgbImage> = match mixers {
        MixerSource::Directory(dir) => {
            let paths = sorted_pngs(dir)?;
            if paths.is_empty() {
                return Err(PipelineError::NoMixers(dir.display().to_string()));
            }
            paths
                .iter()
                .map(|p| load_rgb8(p))
                .collect::<Result<_, _>>()?
        }
        MixerSource::SelfMode => {
            if manifest.entries.len() < 2 {
                return Err(PipelineError::NoMixers(format!(
                    "self mode needs at least 2 images, dataset {:?} has {}",
                    manifest.name,
                    manifest.entries.len()
                )));
            }
            manifest
                .entries
                .iter()
                .map(|e| load_rgb8(&e.image))
                .collect::<Result<_, _>>()?
        }
    };

    struct Task {
        index: usize,
        image: PathBuf,
        mask: Option<PathBuf>,
        seed: u64,
    }
    let tasks: Vec<Task> = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| Task {
            index,
            image: e.image.clone(),
            mask: e.mask.clone(),
            seed: derive_seed(
                cfg.master_seed,
                &format!("{}/augment", manifest.name),
                index as u64,
            ),
        })
        .collect();

    let self_mode = matches!(mixers, MixerSource::SelfMode);
    let pool = thread_pool()?;
    let results: Vec<Result<(String, Vec<u8>, Option<(String, Vec<u8>)>, u64), PipelineError>> =
        pool.install(|| {
            tasks
                .par_iter()
                .map(|task| {
                    let source = load_rgb8(&task.image)?;
                    let (w, h) = source.dimensions();
                    let x = resize_rgb(&source, w, h);
                    let selected: Vec<RgbImage> = mixer_images
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !(self_mode && *i == task.index))
                        .map(|(_, m)| resize_rgb(m, w, h))
                        .collect();
                    if selected.is_empty() {
                        return Err(PipelineError::NoMixers("self mode".into()));
                    }
                    let style = crate::styleaug::StyleConfig {
                        seed: task.seed,
                        ..cfg.style.clone()
                    };
                    let augmented = pixmix(&x, &selected, &style)?;
                    let stem = task
                        .image
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("image")
                        .to_string();
                    let label = match &task.mask {
                        Some(mask_path) => {
                            let bytes =
                                fs::read(mask_path).map_err(|e| file_err(mask_path, e))?;
                            Some((format!("{stem}_aug_mask.png"), bytes))
                        }
                        None => None,
                    };
                    Ok((
                        format!("{stem}_aug.png"),
                        io::rgb_png_bytes(&augmented),
                        label,
                        task.seed,
                    ))
                })
                .collect()
        });

    let mut log = RunLog {
        command: "augment".into(),
        master_seed: cfg.master_seed,
        files: Vec::new(),
    };
    for result in results {
        let (name, bytes, label, seed) = result?;
        let path = out_dir.join(&name);
        fs::write(&path, bytes).map_err(|e| file_err(&path, e))?;
        log.files.push(RunLogEntry { path: name, seed });
        if let Some((mask_name, mask_bytes)) = label {
            let mask_path = out_dir.join(&mask_name);
            fs::write(&mask_path, mask_bytes).map_err(|e| file_err(&mask_path, e))?;
            log.files.push(RunLogEntry {
                path: mask_name,
                seed,
            });
        }
    }
    log.write(out_dir)?;
    Ok(log)
}

// --- eval ---

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub pred_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub roi_dir: Option<PathBuf>,
    pub report_path: PathBuf,
    pub overlay_dir: Option<PathBuf>,
    /// Adds the thin/thick DSC columns.
    pub thin: bool,
    /// Computes metrics over the full frame even when ROIs are supplied.
    pub full_frame: bool,
    pub binarize_threshold: f64,
    pub thin_tau: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub image: String,
    pub dsc: Option<f64>,
    pub acc: Option<f64>,
    pub sp: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub auc: Option<f64>,
    pub dsc_thin: Option<f64>,
    pub dsc_thick: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean: EvalRow,
    pub with_thin: bool,
}

/// Kahan-compensated mean over the defined values.
fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut count = 0usize;
    for v in values.flatten() {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "nan".into(),
    }
}

impl EvalReport {
    /// CSV text: 6 decimal places, `nan` for undefined, final MEAN row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.with_thin {
            out.push_str("image,dsc,acc,sp,recall,precision,auc,dsc_thin,dsc_thick\n");
        } else {
            out.push_str("image,dsc,acc,sp,recall,precision,auc\n");
        }
        for row in self.rows.iter().chain(std::iter::once(&self.mean)) {
            out.push_str(&row.image);
            for v in [row.dsc, row.acc, row.sp, row.recall, row.precision, row.auc] {
                out.push(',');
                out.push_str(&fmt_cell(v));
            }
            if self.with_thin {
                for v in [row.dsc_thin, row.dsc_thick] {
                    out.push(',');
                    out.push_str(&fmt_cell(v));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn png_names(dir: &Path) -> Result<BTreeSet<String>, PipelineError> {
    Ok(sorted_pngs(dir)?
        .into_iter()
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
        .collect())
}

/// Evaluates every prediction against its same-named ground truth and writes
/// the CSV report (and overlays, when requested).
pub fn run_eval(opts: &EvalOptions) -> Result<EvalReport, PipelineError> {
    let pred_names = png_names(&opts.pred_dir)?;
    let gt_names = png_names(&opts.gt_dir)?;
    if pred_names != gt_names {
        return Err(PipelineError::MissingPair {
            only_pred: pred_names.difference(&gt_names).cloned().collect(),
            only_gt: gt_names.difference(&pred_names).cloned().collect(),
        });
    }
    if pred_names.is_empty() {
        return Err(PipelineError::MissingPair {
            only_pred: vec![],
            only_gt: vec![],
        });
    }
    let names: Vec<String> = pred_names.into_iter().collect();

    // Resolve ROI paths up front so missing files fail before any work.
    let roi_paths: Vec<Option<PathBuf>> = match (&opts.roi_dir, opts.full_frame) {
        (Some(dir), false) => names
            .iter()
            .map(|name| {
                let path = dir.join(name);
                if path.exists() {
                    Ok(Some(path))
                } else {
                    Err(PipelineError::MissingRoiFile {
                        name: name.clone(),
                        dir: dir.display().to_string(),
                    })
                }
            })
            .collect::<Result<_, _>>()?,
        _ => names.iter().map(|_| None).collect(),
    };

    if let Some(dir) = &opts.overlay_dir {
        fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    }

    let pool = thread_pool()?;
    let results: Vec<Result<(EvalRow, Option<(String, Vec<u8>)>), PipelineError>> =
        pool.install(|| {
            names
                .par_iter()
                .zip(roi_paths.par_iter())
                .map(|(name, roi_path)| {
                    let prob: GrayImage = io::read_gray_png(&opts.pred_dir.join(name))?;
                    let gt: BinaryMask = io::read_mask_png(&opts.gt_dir.join(name))?;
                    let roi: Option<BinaryMask> = roi_path
                        .as_ref()
                        .map(|p| io::read_mask_png(p))
                        .transpose()?;
                    let pred_bin = raster::threshold(&prob, opts.binarize_threshold);

                    let counts = confusion(&pred_bin, &gt, roi.as_ref())?;
                    let basic = basic_metrics(&counts);
                    let auc = match auc_roc(&prob, &gt, roi.as_ref()) {
                        Ok(v) => Some(v),
                        Err(MetricsError::SingleClass) => None,
                        Err(e) => return Err(e.into()),
                    };
                    let (dsc_thin, dsc_thick) = if opts.thin {
                        let (p, g) = match &roi {
                            Some(r) => (
                                raster::fit_to_roi(&pred_bin, r)?,
                                raster::fit_to_roi(&gt, r)?,
                            ),
                            None => (pred_bin.clone(), gt.clone()),
                        };
                        let d = dsc_partitioned(&p, &g, opts.thin_tau)?;
                        (Some(d.dsc_thin), Some(d.dsc_thick))
                    } else {
                        (None, None)
                    };
                    let overlay = match &opts.overlay_dir {
                        Some(_) => {
                            let img = error_overlay(&pred_bin, &gt)?;
                            Some((name.clone(), io::rgb_png_bytes(&img)))
                        }
                        None => None,
                    };
                    Ok((
                        EvalRow {
                            image: name.clone(),
                            dsc: basic.dsc,
                            acc: basic.acc,
                            sp: basic.sp,
                            recall: basic.recall,
                            precision: basic.precision,
                            auc,
                            dsc_thin,
                            dsc_thick,
                        },
                        overlay,
                    ))
                })
                .collect()
        });

    let mut rows = Vec::with_capacity(names.len());
    for result in results {
        let (row, overlay) = result?;
        if let (Some(dir), Some((name, bytes))) = (&opts.overlay_dir, overlay) {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| file_err(&path, e))?;
        }
        rows.push(row);
    }

    let mean = EvalRow {
        image: "MEAN".into(),
        dsc: mean_defined(rows.iter().map(|r| r.dsc)),
        acc: mean_defined(rows.iter().map(|r| r.acc)),
        sp: mean_defined(rows.iter().map(|r| r.sp)),
        recall: mean_defined(rows.iter().map(|r| r.recall)),
        precision: mean_defined(rows.iter().map(|r| r.precision)),
        auc: mean_defined(rows.iter().map(|r| r.auc)),
        dsc_thin: mean_defined(rows.iter().map(|r| r.dsc_thin)),
        dsc_thick: mean_defined(rows.iter().map(|r| r.dsc_thick)),
    };
    let report = EvalReport {
        rows,
        mean,
        with_thin: opts.thin,
    };
    fs::write(&opts.report_path, report.to_csv())
        .map_err(|e| file_err(&opts.report_path, e))?;
    Ok(report)
}

// --- distance / ttest ---

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub inter_distance: f64,
    pub domains: usize,
    pub pairs: usize,
}

pub fn run_distance(features_csv: &Path) -> Result<DistanceReport, PipelineError> {
    let table = io::read_feature_csv(features_csv)?;
    let inter_distance = metrics::domain_inter_distance(&table)?;
    Ok(DistanceReport {
        inter_distance,
        domains: table.domains().len(),
        pairs: metrics::domain_pair_count(&table),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TTestReport {
    pub t: f64,
    pub p_two_sided: f64,
    pub dof: usize,
}

pub fn run_ttest(a_csv: &Path, b_csv: &Path) -> Result<TTestReport, PipelineError> {
    let a = io::read_score_csv(a_csv)?;
    let b = io::read_score_csv(b_csv)?;
    let r = metrics::paired_t_test(&a, &b)?;
    Ok(TTestReport {
        t: r.t,
        p_two_sided: r.p_two_sided,
        dof: r.dof,
    })
}

/// Loads a score map from a PNG (values `v/255`) or a DGSA tensor file.
pub fn load_score_map(path: &Path) -> Result<ScoreMap, PipelineError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => Ok(ScoreMap::from_gray(&io::read_gray_png(path)?)),
        _ => {
            let t = io::read_tensor(path)?;
            Ok(ScoreMap::new(t.data.into_iter().map(f64::from).collect()))
        }
    }
}

/// Loads an RGB image from a PNG or a rank-3 `(3, H, W)` DGSA tensor.
pub fn load_rgb_input(path: &Path) -> Result<RgbImage, PipelineError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => Ok(io::read_rgb_png(path)?),
        _ => {
            let t = io::read_tensor(path)?;
            if t.dims.len() != 3 || t.dims[0] != 3 {
                return Err(PipelineError::Manifest {
                    path: path.display().to_string(),
                    message: format!("expected a (3, H, W) tensor, found dims {:?}", t.dims),
                });
            }
            let (h, w) = (t.dims[1], t.dims[2]);
            let plane = (h as usize) * (w as usize);
            let mut data = vec![0.0; plane * 3];
            for c in 0..3 {
                for i in 0..plane {
                    data[i * 3 + c] = f64::from(t.data[c * plane + i]);
                }
            }
            Ok(RgbImage::from_data(w, h, data))
        }
    }
}

/// Loads a binary mask from a PNG (>127) or a DGSA tensor (>0.5).
pub fn load_mask_input(path: &Path) -> Result<BinaryMask, PipelineError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => Ok(io::read_mask_png(path)?),
        _ => {
            let t = io::read_tensor(path)?;
            if t.dims.len() != 2 {
                return Err(PipelineError::Manifest {
                    path: path.display().to_string(),
                    message: format!("expected a (H, W) tensor, found dims {:?}", t.dims),
                });
            }
            let (h, w) = (t.dims[0], t.dims[1]);
            Ok(BinaryMask::from_data(
                w,
                h,
                t.data.into_iter().map(|v| v > 0.5).collect(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn disc_roi(size: u32) -> BinaryMask {
        let c = f64::from(size) / 2.0;
        let r = c - 2.0;
        BinaryMask::from_fn(size, size, |x, y| {
            let dx = f64::from(x) + 0.5 - c;
            let dy = f64::from(y) + 0.5 - c;
            dx * dx + dy * dy < r * r
        })
    }

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            master_seed: 42,
            masks_per_dataset: 2,
            attractor_count: 120,
            erosion_iterations: 0,
            growth: GrowthParams {
                attraction_radius_d: 12.0,
                kill_radius_k: 4.0,
                segment_length_l: 3.0,
                max_nodes_m: 200,
                ..GrowthParams::default()
            },
            ..PipelineConfig::default()
        }
    }

    fn write_manifest(dir: &Path, name: &str, entries: &[(&str, Option<&str>, Option<&str>)]) -> PathBuf {
        let manifest = serde_json::json!({
            "name": name,
            "entries": entries.iter().map(|(img, mask, roi)| {
                let mut e = serde_json::Map::new();
                e.insert("image".into(), (*img).into());
                if let Some(m) = mask { e.insert("mask".into(), (*m).into()); }
                if let Some(r) = roi { e.insert("roi".into(), (*r).into()); }
                serde_json::Value::Object(e)
            }).collect::<Vec<_>>(),
        });
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
        path
    }

    #[test]
    fn gen_writes_masks_trees_and_log() {
        let dir = tempdir().unwrap();
        let roi = disc_roi(48);
        io::write_mask_png(&dir.path().join("roi.png"), &roi).unwrap();
        let rgb = RgbImage::from_fn(48, 48, |x, _| [f64::from(x) / 48.0; 3]);
        io::write_rgb_png(&dir.path().join("img.png"), &rgb).unwrap();
        let manifest_path = write_manifest(
            dir.path(),
            "toy",
            &[("img.png", None, Some("roi.png"))],
        );
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let out = dir.path().join("out");
        let cfg = small_config();
        let log = run_gen(&[manifest], &cfg, &out, None).unwrap();
        assert_eq!(log.files.len(), 4); // 2 masks + 2 trees
        assert!(out.join("toy_gen_0000.png").exists());
        assert!(out.join("toy_gen_0001.json").exists());
        assert!(out.join("run_log.json").exists());
        // Every generated mask fits in the ROI.
        let mask = io::read_mask_png(&out.join("toy_gen_0000.png")).unwrap();
        assert!(mask.is_subset_of(&roi));
    }

    #[test]
    fn gen_zero_masks_is_a_valid_empty_run() {
        let dir = tempdir().unwrap();
        let roi = disc_roi(32);
        io::write_mask_png(&dir.path().join("roi.png"), &roi).unwrap();
        let rgb = RgbImage::zeros(32, 32);
        io::write_rgb_png(&dir.path().join("img.png"), &rgb).unwrap();
        let manifest_path =
            write_manifest(dir.path(), "toy", &[("img.png", None, Some("roi.png"))]);
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            masks_per_dataset: 0,
            ..small_config()
        };
        let log = run_gen(&[manifest], &cfg, &out, None).unwrap();
        assert!(log.files.is_empty());
        assert!(out.join("run_log.json").exists());
    }

    #[test]
    fn gen_reruns_are_byte_identical() {
        let dir = tempdir().unwrap();
        let roi = disc_roi(40);
        io::write_mask_png(&dir.path().join("roi.png"), &roi).unwrap();
        let rgb = RgbImage::zeros(40, 40);
        io::write_rgb_png(&dir.path().join("img.png"), &rgb).unwrap();
        let manifest_path =
            write_manifest(dir.path(), "toy", &[("img.png", None, Some("roi.png"))]);
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let cfg = small_config();
        let out1 = dir.path().join("a");
        let out2 = dir.path().join("b");
        run_gen(std::slice::from_ref(&manifest), &cfg, &out1, None).unwrap();
        run_gen(std::slice::from_ref(&manifest), &cfg, &out2, None).unwrap();
        for name in ["toy_gen_0000.png", "toy_gen_0001.png", "toy_gen_0000.json", "run_log.json"] {
            assert_eq!(
                fs::read(out1.join(name)).unwrap(),
                fs::read(out2.join(name)).unwrap(),
                "{name} differs between reruns"
            );
        }
    }

    #[test]
    fn augment_writes_one_output_per_input() {
        let dir = tempdir().unwrap();
        for i in 0..3 {
            let img = RgbImage::from_fn(24, 20, |x, y| {
                [
                    f64::from((x + i) % 24) / 24.0,
                    f64::from(y) / 20.0,
                    0.5,
                ]
            });
            io::write_rgb_png(&dir.path().join(format!("im{i}.png")), &img).unwrap();
            let mask = BinaryMask::from_fn(24, 20, |x, _| x % 2 == 0);
            io::write_mask_png(&dir.path().join(format!("m{i}.png")), &mask).unwrap();
        }
        let manifest_path = write_manifest(
            dir.path(),
            "toy",
            &[
                ("im0.png", Some("m0.png"), None),
                ("im1.png", Some("m1.png"), None),
                ("im2.png", Some("m2.png"), None),
            ],
        );
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let out = dir.path().join("aug");
        let cfg = small_config();
        let log = run_augment(&manifest, &MixerSource::SelfMode, &cfg, &out).unwrap();
        assert_eq!(log.files.len(), 6); // 3 images + 3 labels
        for i in 0..3 {
            let aug = io::read_rgb_png(&out.join(format!("im{i}_aug.png"))).unwrap();
            assert_eq!(aug.dims(), (24, 20));
            // Label is byte-identical to the source mask.
            assert_eq!(
                fs::read(out.join(format!("im{i}_aug_mask.png"))).unwrap(),
                fs::read(dir.path().join(format!("m{i}.png"))).unwrap()
            );
        }
    }

    #[test]
    fn eval_of_identical_dirs_scores_one() {
        let dir = tempdir().unwrap();
        let gt_dir = dir.path().join("gt");
        fs::create_dir_all(&gt_dir).unwrap();
        for i in 0..2 {
            let m = BinaryMask::from_fn(16, 16, |x, y| (x + y + i) % 3 == 0);
            io::write_mask_png(&gt_dir.join(format!("s{i}.png")), &m).unwrap();
        }
        let report = run_eval(&EvalOptions {
            pred_dir: gt_dir.clone(),
            gt_dir: gt_dir.clone(),
            roi_dir: None,
            report_path: dir.path().join("report.csv"),
            overlay_dir: None,
            thin: true,
            full_frame: false,
            binarize_threshold: 0.5,
            thin_tau: 1.2,
        })
        .unwrap();
        assert_eq!(report.mean.dsc, Some(1.0));
        assert_eq!(report.mean.dsc_thin, Some(1.0));
        let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv.starts_with("image,dsc,acc,sp,recall,precision,auc,dsc_thin,dsc_thick\n"));
        assert!(csv.contains("MEAN,1.000000,1.000000"));
    }

    #[test]
    fn eval_rejects_unmatched_files() {
        let dir = tempdir().unwrap();
        let pred = dir.path().join("pred");
        let gt = dir.path().join("gt");
        fs::create_dir_all(&pred).unwrap();
        fs::create_dir_all(&gt).unwrap();
        let m = BinaryMask::from_fn(8, 8, |x, _| x > 3);
        io::write_mask_png(&pred.join("a.png"), &m).unwrap();
        io::write_mask_png(&gt.join("b.png"), &m).unwrap();
        let err = run_eval(&EvalOptions {
            pred_dir: pred,
            gt_dir: gt,
            roi_dir: None,
            report_path: dir.path().join("r.csv"),
            overlay_dir: None,
            thin: false,
            full_frame: false,
            binarize_threshold: 0.5,
            thin_tau: 1.2,
        })
        .unwrap_err();
        match err {
            PipelineError::MissingPair { only_pred, only_gt } => {
                assert_eq!(only_pred, vec!["a.png".to_string()]);
                assert_eq!(only_gt, vec!["b.png".to_string()]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
