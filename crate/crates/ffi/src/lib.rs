//! C ABI over the `mmcvae` library.
//!
//! Models are opaque `MmcvaeModel` handles owned by the caller and released
//! with [`mmcvae_model_free`]. Every fallible function returns an
//! [`MmcvaeStatus`]; on failure a message is kept per thread and can be read
//! with [`mmcvae_last_error`]. Matrices are dense, row-major `double` arrays
//! whose output buffers the caller allocates.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmcvae::data::{LabeledDataset, Origin};
use mmcvae::kernels::{mmd_biased, KernelConfig};
use mmcvae::model::{
    load_checkpoint, save_checkpoint, Architecture, Keep, Latent, Likelihood, MmcVae,
};
use mmcvae::tensor::{Matrix, Rng};
use mmcvae::train::{train, TrainConfig};
use mmcvae::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmcvaeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Config = 4,
    NonFinite = 5,
    Parse = 6,
    Checkpoint = 7,
    Io = 8,
    Oracle = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmcvaeLikelihood {
    Gaussian = 0,
    Bernoulli = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmcvaeLatent {
    /// Shared latent `z`.
    Background = 0,
    /// Target-specific latent `s`.
    Salient = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmcvaeKeep {
    Both = 0,
    BackgroundOnly = 1,
    SalientOnly = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmcvaeArchitecture {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub z_dim: usize,
    pub s_dim: usize,
    pub likelihood: MmcvaeLikelihood,
    pub zero_bias_decoder: bool,
}

/// Training settings. A `kernel_gamma` of zero or less selects the median
/// heuristic bandwidth.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmcvaeTrainConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub zero_bias_decoder: bool,
    pub kernel_gamma: f64,
}

/// Opaque model handle.
pub struct MmcvaeModel {
    inner: MmcVae,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MmcvaeStatus {
    match e {
        Error::Dimension { .. } => MmcvaeStatus::Dimension,
        Error::InvalidInput(_) => MmcvaeStatus::InvalidInput,
        Error::Config(_) => MmcvaeStatus::Config,
        Error::NonFinite(_) => MmcvaeStatus::NonFinite,
        Error::Oracle(_) => MmcvaeStatus::Oracle,
        Error::Parse { .. } => MmcvaeStatus::Parse,
        Error::Checkpoint(_) => MmcvaeStatus::Checkpoint,
        Error::Io { .. } => MmcvaeStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> MmcvaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MmcvaeStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed for `{name}`"));
            MmcvaeStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            MmcvaeStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &'static str) -> std::result::Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(name))
    } else {
        Ok(p)
    }
}

unsafe fn read_matrix(
    p: *const f64,
    rows: usize,
    cols: usize,
    name: &'static str,
) -> std::result::Result<Matrix, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::InvalidInput(format!("{name}: {rows} x {cols} overflows")))?;
    if len == 0 {
        return Ok(Matrix::from_vec(rows, cols, Vec::new())?);
    }
    let p = non_null(p, name)?;
    let data = std::slice::from_raw_parts(p, len).to_vec();
    Ok(Matrix::from_vec(rows, cols, data)?)
}

unsafe fn write_out(src: &Matrix, out: *mut f64, name: &'static str) -> FfiResult {
    let n = src.data().len();
    if n == 0 {
        return Ok(());
    }
    let out = non_null(out as *const f64, name)? as *mut f64;
    std::slice::from_raw_parts_mut(out, n).copy_from_slice(src.data());
    Ok(())
}

unsafe fn c_path(p: *const c_char) -> std::result::Result<std::path::PathBuf, Failure> {
    let p = non_null(p, "path")?;
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput("path is not valid UTF-8".into()))?;
    Ok(s.into())
}

fn to_arch(a: &MmcvaeArchitecture) -> Architecture {
    Architecture {
        input_dim: a.input_dim,
        hidden_dim: a.hidden_dim,
        z_dim: a.z_dim,
        s_dim: a.s_dim,
        likelihood: match a.likelihood {
            MmcvaeLikelihood::Gaussian => Likelihood::GaussianUnitVariance,
            MmcvaeLikelihood::Bernoulli => Likelihood::Bernoulli,
        },
        zero_bias_decoder: a.zero_bias_decoder,
    }
}

fn from_arch(a: &Architecture) -> MmcvaeArchitecture {
    MmcvaeArchitecture {
        input_dim: a.input_dim,
        hidden_dim: a.hidden_dim,
        z_dim: a.z_dim,
        s_dim: a.s_dim,
        likelihood: match a.likelihood {
            Likelihood::GaussianUnitVariance => MmcvaeLikelihood::Gaussian,
            Likelihood::Bernoulli => MmcvaeLikelihood::Bernoulli,
        },
        zero_bias_decoder: a.zero_bias_decoder,
    }
}

fn kernel_of(gamma: f64) -> KernelConfig {
    if gamma > 0.0 {
        KernelConfig::Fixed { gamma }
    } else {
        KernelConfig::MedianHeuristic
    }
}

fn to_train_config(c: &MmcvaeTrainConfig) -> TrainConfig {
    TrainConfig {
        lambda1: c.lambda1,
        lambda2: c.lambda2,
        lr: c.lr,
        beta1: c.beta1,
        beta2: c.beta2,
        eps: c.eps,
        batch_size: c.batch_size,
        epochs: c.epochs,
        seed: c.seed,
        zero_bias_decoder: c.zero_bias_decoder,
        kernel: kernel_of(c.kernel_gamma),
    }
}

fn boxed(model: MmcVae, out: *mut *mut MmcvaeModel) -> FfiResult {
    let out = non_null(out as *const *mut MmcvaeModel, "out")? as *mut *mut MmcvaeModel;
    unsafe { *out = Box::into_raw(Box::new(MmcvaeModel { inner: model })) };
    Ok(())
}

unsafe fn model_ref<'a>(m: *const MmcvaeModel) -> std::result::Result<&'a MmcVae, Failure> {
    Ok(&(*non_null(m, "model")?).inner)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mmcvae_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mmcvae_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn mmcvae_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Default training settings.
#[no_mangle]
pub extern "C" fn mmcvae_train_config_default() -> MmcvaeTrainConfig {
    let d = TrainConfig::default();
    MmcvaeTrainConfig {
        lambda1: d.lambda1,
        lambda2: d.lambda2,
        lr: d.lr,
        beta1: d.beta1,
        beta2: d.beta2,
        eps: d.eps,
        batch_size: d.batch_size,
        epochs: d.epochs,
        seed: d.seed,
        zero_bias_decoder: d.zero_bias_decoder,
        kernel_gamma: 0.0,
    }
}

/// Freshly initialized model.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_new(
    arch: *const MmcvaeArchitecture,
    seed: u64,
    out: *mut *mut MmcvaeModel,
) -> MmcvaeStatus {
    guard(|| {
        let arch = to_arch(&*non_null(arch, "arch")?);
        let model = MmcVae::new(arch, &mut Rng::seed_from_u64(seed))?;
        boxed(model, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_load(
    path: *const c_char,
    out: *mut *mut MmcvaeModel,
) -> MmcvaeStatus {
    guard(|| {
        let model = load_checkpoint(c_path(path)?)?;
        boxed(model, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_save(
    model: *const MmcvaeModel,
    path: *const c_char,
) -> MmcvaeStatus {
    guard(|| {
        save_checkpoint(model_ref(model)?, c_path(path)?)?;
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_free(model: *mut MmcvaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_architecture(
    model: *const MmcvaeModel,
    out: *mut MmcvaeArchitecture,
) -> MmcvaeStatus {
    guard(|| {
        let a = from_arch(&model_ref(model)?.arch);
        *(non_null(out as *const MmcvaeArchitecture, "out")? as *mut MmcvaeArchitecture) = a;
        Ok(())
    })
}

/// Posterior mean (and optionally log-variance) of one latent block.
/// `x` is `n_rows × input_dim`; outputs are `n_rows × latent_dim`.
/// `logvar_out` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_encode(
    model: *const MmcvaeModel,
    x: *const f64,
    n_rows: usize,
    latent: MmcvaeLatent,
    mu_out: *mut f64,
    logvar_out: *mut f64,
) -> MmcvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = read_matrix(x, n_rows, m.arch.input_dim, "x")?;
        let which = match latent {
            MmcvaeLatent::Background => Latent::Z,
            MmcvaeLatent::Salient => Latent::S,
        };
        let post = m.encode(&x, which)?;
        write_out(&post.mu, mu_out, "mu_out")?;
        if !logvar_out.is_null() {
            write_out(&post.logvar, logvar_out, "logvar_out")?;
        }
        Ok(())
    })
}

/// Decoder mean for latent codes `z` (`n_rows × z_dim`) and `s`
/// (`n_rows × s_dim`); writes `n_rows × input_dim` values.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_generate(
    model: *const MmcvaeModel,
    z: *const f64,
    s: *const f64,
    n_rows: usize,
    out: *mut f64,
) -> MmcvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let z = read_matrix(z, n_rows, m.arch.z_dim, "z")?;
        let s = read_matrix(s, n_rows, m.arch.s_dim, "s")?;
        write_out(&m.generate(&z, &s)?, out, "out")
    })
}

/// Reconstruction from posterior means with the dropped block set to zero.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_model_reconstruct(
    model: *const MmcvaeModel,
    x: *const f64,
    n_rows: usize,
    keep: MmcvaeKeep,
    out: *mut f64,
) -> MmcvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = read_matrix(x, n_rows, m.arch.input_dim, "x")?;
        let keep = match keep {
            MmcvaeKeep::Both => Keep::Both,
            MmcvaeKeep::BackgroundOnly => Keep::BackgroundOnly,
            MmcvaeKeep::SalientOnly => Keep::SalientOnly,
        };
        write_out(&m.reconstruct_partial(&x, keep)?, out, "out")
    })
}

/// Trains a new model on `target` (`n_target × input_dim`) and `background`
/// (`n_background × input_dim`). `final_loss` may be NULL; otherwise it
/// receives the mean objective of the last epoch. The architecture and the
/// config must agree on `zero_bias_decoder`.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_train(
    arch: *const MmcvaeArchitecture,
    config: *const MmcvaeTrainConfig,
    target: *const f64,
    n_target: usize,
    background: *const f64,
    n_background: usize,
    out: *mut *mut MmcvaeModel,
    final_loss: *mut f64,
) -> MmcvaeStatus {
    guard(|| {
        let arch = to_arch(&*non_null(arch, "arch")?);
        let cfg = to_train_config(&*non_null(config, "config")?);
        if arch.zero_bias_decoder != cfg.zero_bias_decoder {
            return Err(Error::Config(
                "zero_bias_decoder differs between architecture and config".into(),
            )
            .into());
        }
        let t = read_matrix(target, n_target, arch.input_dim, "target")?;
        let b = read_matrix(background, n_background, arch.input_dim, "background")?;
        let (model, log) = train(
            arch,
            &LabeledDataset::new(t, Origin::Target),
            &LabeledDataset::new(b, Origin::Background),
            &cfg,
        )?;
        if !final_loss.is_null() {
            *final_loss = log.epochs.last().map_or(f64::NAN, |e| e.loss.total);
        }
        boxed(model, out)
    })
}

/// Biased squared MMD between `x` (`n_x × dim`) and `y` (`n_y × dim`) under a
/// Gaussian kernel; `gamma <= 0` selects the median heuristic.
#[no_mangle]
pub unsafe extern "C" fn mmcvae_mmd(
    x: *const f64,
    n_x: usize,
    y: *const f64,
    n_y: usize,
    dim: usize,
    gamma: f64,
    out: *mut f64,
) -> MmcvaeStatus {
    guard(|| {
        let x = read_matrix(x, n_x, dim, "x")?;
        let y = read_matrix(y, n_y, dim, "y")?;
        let v = mmd_biased(&x, &y, &kernel_of(gamma))?;
        *(non_null(out as *const f64, "out")? as *mut f64) = v;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, MmcvaeStatus::Panic);
        let msg = unsafe { CStr::from_ptr(mmcvae_last_error()) }
            .to_str()
            .unwrap()
            .to_owned();
        assert_eq!(msg, "internal panic: boom");
    }

    #[test]
    fn library_errors_map_to_distinct_codes() {
        assert_eq!(
            status_of(&Error::NonFinite("g".into())),
            MmcvaeStatus::NonFinite
        );
        assert_eq!(
            status_of(&Error::Checkpoint("c".into())),
            MmcvaeStatus::Checkpoint
        );
        let s = guard(|| Err(Error::InvalidInput("bad rows".into()).into()));
        assert_eq!(s, MmcvaeStatus::InvalidInput);
        assert!(unsafe { CStr::from_ptr(mmcvae_last_error()) }
            .to_str()
            .unwrap()
            .contains("bad rows"));
    }

    #[test]
    fn gamma_sign_selects_kernel() {
        assert_eq!(kernel_of(0.0), KernelConfig::MedianHeuristic);
        assert_eq!(kernel_of(2.0), KernelConfig::Fixed { gamma: 2.0 });
    }
}
