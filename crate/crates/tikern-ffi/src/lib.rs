//! C ABI for the kernel-SVM library.
//!
//! All objects are opaque handles created and destroyed here; every
//! fallible call returns a `tk_status` code and stores a human-readable
//! message retrievable with `tk_last_error_message` (thread-local).
//! See `include/tikern.h` for the C declarations.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::str::FromStr;

use libc::{c_char, c_double, c_int};

use tikern::config::{KernelParams, Method};
use tikern::data::{load_idx, LabeledDataset};
use tikern::kernels::KernelSpec;
use tikern::svm::MulticlassModel;
use tikern::Image;

pub const TK_OK: c_int = 0;
pub const TK_NULL_ARGUMENT: c_int = 1;
pub const TK_INVALID_UTF8: c_int = 2;
pub const TK_ERROR: c_int = 3;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).expect("no interior NUL"));
}

/// Message for the most recent failure on this thread. Valid until the
/// next failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn tk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn catch<T>(out: *mut *mut T, f: impl FnOnce() -> tikern::Result<T>) -> c_int {
    if out.is_null() {
        set_error("output handle pointer is NULL");
        return TK_NULL_ARGUMENT;
    }
    match f() {
        Ok(v) => {
            unsafe { *out = Box::into_raw(Box::new(v)) };
            TK_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            TK_ERROR
        }
    }
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(TK_NULL_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        TK_INVALID_UTF8
    })
}

pub struct TkDataset(LabeledDataset);
pub struct TkSpec(KernelSpec);
pub struct TkModel(MulticlassModel);

/// Loads an IDX image/label file pair.
///
/// # Safety
/// `images_path` and `labels_path` must be NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tk_dataset_load_idx(
    images_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut TkDataset,
) -> c_int {
    let images = match cstr(images_path, "images_path") {
        Ok(s) => PathBuf::from(s),
        Err(code) => return code,
    };
    let labels = match cstr(labels_path, "labels_path") {
        Ok(s) => PathBuf::from(s),
        Err(code) => return code,
    };
    catch(out, || Ok(TkDataset(load_idx(&images, &labels)?)))
}

/// # Safety
/// `dataset` must come from `tk_dataset_load_idx` and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn tk_dataset_len(dataset: *const TkDataset) -> c_int {
    if dataset.is_null() {
        return -1;
    }
    (*dataset).0.len() as c_int
}

/// # Safety
/// `dataset` must be valid; `rows`/`cols` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn tk_dataset_dims(
    dataset: *const TkDataset,
    rows: *mut c_int,
    cols: *mut c_int,
) -> c_int {
    if dataset.is_null() {
        set_error("dataset is NULL");
        return TK_NULL_ARGUMENT;
    }
    if !rows.is_null() {
        *rows = (*dataset).0.rows() as c_int;
    }
    if !cols.is_null() {
        *cols = (*dataset).0.cols() as c_int;
    }
    TK_OK
}

/// # Safety
/// `dataset` must be a handle from this library or NULL (then a no-op).
#[no_mangle]
pub unsafe extern "C" fn tk_dataset_free(dataset: *mut TkDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Builds a kernel spec from a method name ("SVM", "L", "TI", "RI",
/// "L-TI", "L-RI", "TI-RI", "L-TI-RI", "RI-avg") with default
/// hyper-parameters at the given image dimensions.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tk_spec_from_method(
    name: *const c_char,
    rows: c_int,
    cols: c_int,
    out: *mut *mut TkSpec,
) -> c_int {
    let name = match cstr(name, "method name") {
        Ok(s) => s.to_owned(),
        Err(code) => return code,
    };
    catch(out, || {
        let method = Method::from_str(&name)?;
        if rows < 1 || cols < 1 {
            return Err(tikern::Error::InvalidConfig(format!(
                "rows/cols must be >= 1, got {rows}x{cols}"
            )));
        }
        Ok(TkSpec(KernelParams::default().spec(
            method,
            rows as usize,
            cols as usize,
        )?))
    })
}

/// Builds a kernel spec from its JSON serialization.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tk_spec_from_json(json: *const c_char, out: *mut *mut TkSpec) -> c_int {
    let json = match cstr(json, "spec json") {
        Ok(s) => s.to_owned(),
        Err(code) => return code,
    };
    catch(out, || Ok(TkSpec(KernelSpec::from_json(&json)?)))
}

/// # Safety
/// `spec` must be a handle from this library or NULL (then a no-op).
#[no_mangle]
pub unsafe extern "C" fn tk_spec_free(spec: *mut TkSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Trains a one-vs-one multiclass SVM.
///
/// # Safety
/// `dataset` and `spec` must be valid handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tk_train(
    dataset: *const TkDataset,
    spec: *const TkSpec,
    c: c_double,
    tol: c_double,
    workers: c_int,
    out: *mut *mut TkModel,
) -> c_int {
    if dataset.is_null() || spec.is_null() {
        set_error("dataset or spec is NULL");
        return TK_NULL_ARGUMENT;
    }
    let ds = &(*dataset).0;
    let spec = &(*spec).0;
    catch(out, || {
        Ok(TkModel(MulticlassModel::train(
            &ds.images,
            &ds.labels,
            spec,
            c,
            tol,
            workers.max(1) as usize,
        )?))
    })
}

/// Predicts the class of one row-major image.
///
/// # Safety
/// `model` must be valid; `pixels` must point to `rows * cols` doubles;
/// `out_label` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tk_model_predict(
    model: *const TkModel,
    pixels: *const c_double,
    rows: c_int,
    cols: c_int,
    out_label: *mut c_int,
) -> c_int {
    if model.is_null() || pixels.is_null() || out_label.is_null() {
        set_error("model, pixels, or out_label is NULL");
        return TK_NULL_ARGUMENT;
    }
    if rows < 1 || cols < 1 {
        set_error("rows/cols must be >= 1");
        return TK_ERROR;
    }
    let len = rows as usize * cols as usize;
    let px = std::slice::from_raw_parts(pixels, len).to_vec();
    let result = Image::new(rows as usize, cols as usize, px)
        .and_then(|img| (*model).0.predict(&img));
    match result {
        Ok(label) => {
            *out_label = label as c_int;
            TK_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            TK_ERROR
        }
    }
}

/// # Safety
/// `model` must be valid; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tk_model_save(model: *const TkModel, path: *const c_char) -> c_int {
    if model.is_null() {
        set_error("model is NULL");
        return TK_NULL_ARGUMENT;
    }
    let path = match cstr(path, "path") {
        Ok(s) => PathBuf::from(s),
        Err(code) => return code,
    };
    match (*model).0.save_binary(&path) {
        Ok(()) => TK_OK,
        Err(e) => {
            set_error(&e.to_string());
            TK_ERROR
        }
    }
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tk_model_load(path: *const c_char, out: *mut *mut TkModel) -> c_int {
    let path = match cstr(path, "path") {
        Ok(s) => PathBuf::from(s),
        Err(code) => return code,
    };
    catch(out, || Ok(TkModel(MulticlassModel::load_binary(&path)?)))
}

/// # Safety
/// `model` must be a handle from this library or NULL (then a no-op).
#[no_mangle]
pub unsafe extern "C" fn tk_model_free(model: *mut TkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
