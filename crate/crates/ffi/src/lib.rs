//! C ABI over the trajpred predictor.
//!
//! Every function returns a [`TrajpredStatus`]. On failure a description is
//! kept per thread and can be read with [`trajpred_last_error`]. Models are
//! opaque [`TrajpredModel`] handles released with [`trajpred_model_free`].
//! Coordinates are interleaved `x, y` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use trajpred::data::{AgentClass, NeighborTrack, Scene, Units};
use trajpred::eval::{ade, fde, linear_extrapolate};
use trajpred::geometry::BevImage;
use trajpred::model::{predict, prepare_input, ModelConfig, Mode, TrajectoryModel};
use trajpred::numerics::ModelParams;
use trajpred::{Error, T_OBS, T_PRED};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajpredStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Load = 4,
    Numeric = 5,
    Contract = 6,
    Panic = 7,
}

/// Model configuration and parameters.
pub struct TrajpredModel {
    model: TrajectoryModel,
    params: ModelParams<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TrajpredStatus {
    match e {
        Error::Io(_) | Error::MissingPaths(_) | Error::Image(_) => TrajpredStatus::Io,
        Error::Load(_) | Error::Json(_) | Error::Parse { .. } => TrajpredStatus::Load,
        Error::Numeric(_) | Error::Training { .. } | Error::Determinism { .. } => TrajpredStatus::Numeric,
        Error::Contract(_) | Error::EmptyContext | Error::Empty(_) | Error::Dimension { .. } => {
            TrajpredStatus::Contract
        }
        _ => TrajpredStatus::InvalidArgument,
    }
}

struct Fail(TrajpredStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TrajpredStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(TrajpredStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TrajpredStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TrajpredStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TrajpredStatus::Panic
        }
    }
}

type MetricFn = fn(&[Vec<[f64; 2]>], &[Vec<[f64; 2]>]) -> trajpred::Result<f64>;

unsafe fn points(ptr: *const f64, count: usize, what: &str) -> Result<Vec<[f64; 2]>, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let flat = std::slice::from_raw_parts(ptr, count * 2);
    Ok(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<Option<&Path>, Fail> {
    if p.is_null() {
        return Ok(None);
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))?;
    Ok(Some(Path::new(s)))
}

fn write_points(out: *mut f64, pts: &[[f64; 2]]) {
    for (k, p) in pts.iter().enumerate() {
        unsafe {
            *out.add(2 * k) = p[0];
            *out.add(2 * k + 1) = p[1];
        }
    }
}

/// Observed steps per agent the model expects.
#[no_mangle]
pub extern "C" fn trajpred_t_obs() -> usize {
    T_OBS
}

/// Predicted steps per agent.
#[no_mangle]
pub extern "C" fn trajpred_t_pred() -> usize {
    T_PRED
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn trajpred_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Freshly initialized model with the default architecture.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn trajpred_model_new_default(seed: u64, out: *mut *mut TrajpredModel) -> TrajpredStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (model, params) = TrajectoryModel::new(ModelConfig::default(), seed)?;
        *out = Box::into_raw(Box::new(TrajpredModel { model, params }));
        Ok(())
    })
}

/// Loads a checkpoint. `config_path` may be NULL for the default architecture.
///
/// # Safety
/// Paths must be NUL-terminated strings or NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trajpred_model_load(
    config_path: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut TrajpredModel,
) -> TrajpredStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ckpt = path_arg(checkpoint_path, "checkpoint_path")?.ok_or_else(|| null("checkpoint_path"))?;
        let config = match path_arg(config_path, "config_path")? {
            Some(p) => ModelConfig::load(p)?,
            None => ModelConfig::default(),
        };
        let (model, params) = TrajectoryModel::from_checkpoint(config, ckpt)?;
        *out = Box::into_raw(Box::new(TrajpredModel { model, params }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn trajpred_model_free(model: *mut TrajpredModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicts the next `trajpred_t_pred()` positions of one agent.
///
/// * `observed`: `trajpred_t_obs()` points.
/// * `neighbors`: `n_neighbors` tracks of `trajpred_t_obs()` points each;
///   may be NULL when `n_neighbors` is 0.
/// * `neighbor_valid`: one byte per neighbor point (nonzero = observed), or
///   NULL when every point is observed.
/// * `image_rgb`: optional `image_height × image_width × 3` bytes of the scene
///   image in the same world frame, required by patch-backbone models.
/// * `out_trajectory`: room for `trajpred_t_pred()` points.
/// * `out_goal`: room for one point, or NULL.
///
/// # Safety
/// Every non-NULL pointer must reference at least the sizes listed above.
#[no_mangle]
pub unsafe extern "C" fn trajpred_model_predict(
    model: *const TrajpredModel,
    observed: *const f64,
    neighbors: *const f64,
    neighbor_valid: *const u8,
    n_neighbors: usize,
    image_rgb: *const u8,
    image_height: usize,
    image_width: usize,
    units_per_pixel: f64,
    image_origin_x: f64,
    image_origin_y: f64,
    out_trajectory: *mut f64,
    out_goal: *mut f64,
) -> TrajpredStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out_trajectory.is_null() {
            return Err(null("out_trajectory"));
        }
        let obs = points(observed, T_OBS, "observed")?;
        let mut tracks = Vec::with_capacity(n_neighbors);
        if n_neighbors > 0 {
            let all = points(neighbors, n_neighbors * T_OBS, "neighbors")?;
            let valid: Vec<bool> = if neighbor_valid.is_null() {
                vec![true; n_neighbors * T_OBS]
            } else {
                std::slice::from_raw_parts(neighbor_valid, n_neighbors * T_OBS)
                    .iter()
                    .map(|&v| v != 0)
                    .collect()
            };
            for j in 0..n_neighbors {
                tracks.push(NeighborTrack {
                    agent_id: j as i64 + 1,
                    positions: all[j * T_OBS..(j + 1) * T_OBS].to_vec(),
                    valid: valid[j * T_OBS..(j + 1) * T_OBS].to_vec(),
                });
            }
        }
        let image = if image_rgb.is_null() {
            None
        } else {
            let bytes = std::slice::from_raw_parts(image_rgb, image_height * image_width * 3);
            let px = bytes.iter().map(|&b| b as f32 / 255.0).collect();
            Some(BevImage::new(
                image_height,
                image_width,
                px,
                units_per_pixel,
                [image_origin_x, image_origin_y],
            )?)
        };
        let last = *obs.last().expect("T_OBS > 0");
        let scene = Scene {
            dataset: "ffi".into(),
            agent_id: 0,
            class: AgentClass::Pedestrian,
            units: Units::Meters,
            start_step: 0,
            observed: obs,
            // Placeholder; inference never reads the future.
            future: vec![last; T_PRED],
            neighbors: tracks,
            image: None,
        };
        let input = prepare_input(&scene, image.as_ref(), &m.model.config)?.without_future();
        let pred = predict(&m.params, &m.model, &input, Mode::Inference)?;
        write_points(out_trajectory, &pred.world_trajectory());
        if !out_goal.is_null() {
            write_points(out_goal, &[pred.world_goal()]);
        }
        Ok(())
    })
}

/// Constant-velocity extrapolation of the last two of `n_observed` points into
/// `trajpred_t_pred()` points.
///
/// # Safety
/// `observed` holds `n_observed` points; `out` has room for `trajpred_t_pred()`.
#[no_mangle]
pub unsafe extern "C" fn trajpred_linear_baseline(observed: *const f64, n_observed: usize, out: *mut f64) -> TrajpredStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let obs = points(observed, n_observed, "observed")?;
        write_points(out, &linear_extrapolate(&obs, T_PRED)?);
        Ok(())
    })
}

unsafe fn metric(
    preds: *const f64,
    gts: *const f64,
    n_agents: usize,
    steps: usize,
    out: *mut f64,
    f: MetricFn,
) -> TrajpredStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if steps == 0 {
            return Err(invalid("steps must be positive"));
        }
        let p = points(preds, n_agents * steps, "preds")?;
        let g = points(gts, n_agents * steps, "gts")?;
        let split = |v: Vec<[f64; 2]>| v.chunks(steps).map(|c| c.to_vec()).collect::<Vec<_>>();
        *out = f(&split(p), &split(g))?;
        Ok(())
    })
}

/// Average displacement error of `n_agents` trajectories of `steps` points.
///
/// # Safety
/// `preds` and `gts` each hold `n_agents * steps` points; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn trajpred_ade(preds: *const f64, gts: *const f64, n_agents: usize, steps: usize, out: *mut f64) -> TrajpredStatus {
    metric(preds, gts, n_agents, steps, out, ade)
}

/// Final displacement error of `n_agents` trajectories of `steps` points.
///
/// # Safety
/// Same layout as [`trajpred_ade`].
#[no_mangle]
pub unsafe extern "C" fn trajpred_fde(preds: *const f64, gts: *const f64, n_agents: usize, steps: usize, out: *mut f64) -> TrajpredStatus {
    metric(preds, gts, n_agents, steps, out, fde)
}
