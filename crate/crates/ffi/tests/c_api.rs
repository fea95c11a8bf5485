use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pdesift_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let len = unsafe { pds_last_error(buf.as_mut_ptr(), buf.len()) };
    let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(msg.len(), len.min(255));
    msg
}

fn simulate(system: &str, noise: f64) -> *mut PdsField {
    let name = CString::new(system).unwrap();
    let mut field = ptr::null_mut();
    let status = unsafe { pds_simulate(name.as_ptr(), noise, 0, &mut field) };
    assert_eq!(status, PdsStatus::Ok, "{}", last_error());
    assert!(!field.is_null());
    field
}

fn label(model: *const PdsModel, i: usize) -> String {
    let mut needed = 0usize;
    assert_eq!(
        unsafe { pds_model_label(model, i, ptr::null_mut(), 0, &mut needed) },
        PdsStatus::Ok
    );
    let mut buf = vec![0 as c_char; needed + 1];
    assert_eq!(
        unsafe { pds_model_label(model, i, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) },
        PdsStatus::Ok
    );
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

#[test]
fn discovers_burgers_through_the_c_interface() {
    let field = simulate("burgers", 0.0);
    let mut model = ptr::null_mut();
    let status = unsafe { pds_discover(field, ptr::null(), 0, &mut model) };
    assert_eq!(status, PdsStatus::Ok, "{}", last_error());
    assert_eq!(last_error(), "");

    let k = unsafe { pds_model_num_terms(model) };
    assert_eq!(k, 49);
    let (mut pip, mut mean, mut std) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    unsafe {
        assert_eq!(pds_model_pip(model, pip.as_mut_ptr(), k), PdsStatus::Ok);
        assert_eq!(pds_model_mean(model, mean.as_mut_ptr(), k), PdsStatus::Ok);
        assert_eq!(pds_model_std(model, std.as_mut_ptr(), k), PdsStatus::Ok);
    }
    let support: Vec<String> = (0..k).filter(|&i| pip[i] > 0.5).map(|i| label(model, i)).collect();
    assert_eq!(support, vec!["u_xx", "u*u_x"]);
    for i in 0..k {
        if pip[i] > 0.5 {
            assert!(std[i] > 0.0);
        } else {
            assert_eq!((mean[i], std[i]), (0.0, 0.0));
        }
    }

    let mut needed = 0usize;
    unsafe { pds_model_equation(model, ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed + 1];
    unsafe { pds_model_equation(model, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    let equation = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    assert!(equation.starts_with("u_t = "), "{equation}");
    assert_eq!(equation.len(), needed);

    unsafe { pds_model_json(model, ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed + 1];
    unsafe { pds_model_json(model, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    let json: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap()).unwrap();
    assert_eq!(json["support"], serde_json::json!(["u_xx", "u*u_x"]));

    unsafe {
        pds_model_free(model);
        pds_field_free(field);
    }
}

#[test]
fn fields_round_trip_through_snapshot_files() {
    let field = simulate("heat1d", 0.01);
    let (mut nt, mut nx, mut ny) = (0, 0, 0);
    assert_eq!(
        unsafe { pds_field_shape(field, &mut nt, &mut nx, &mut ny) },
        PdsStatus::Ok
    );
    assert_eq!(ny, 1);
    let mut values = vec![0.0; nt * nx];
    assert_eq!(
        unsafe { pds_field_values(field, values.as_mut_ptr(), values.len()) },
        PdsStatus::Ok
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("heat.field").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pds_field_save(field, path.as_ptr()) }, PdsStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { pds_field_load(path.as_ptr(), &mut loaded) }, PdsStatus::Ok);
    let mut again = vec![0.0; nt * nx];
    assert_eq!(
        unsafe { pds_field_values(loaded, again.as_mut_ptr(), again.len()) },
        PdsStatus::Ok
    );
    assert_eq!(values, again);

    let mut short = vec![0.0; 3];
    assert_eq!(
        unsafe { pds_field_values(field, short.as_mut_ptr(), 3) },
        PdsStatus::InvalidArgument
    );
    assert!(last_error().contains("buffer"));
    unsafe {
        pds_field_free(loaded);
        pds_field_free(field);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut field = ptr::null_mut();
    let unknown = CString::new("navier").unwrap();
    assert_eq!(
        unsafe { pds_simulate(unknown.as_ptr(), 0.0, 0, &mut field) },
        PdsStatus::InvalidArgument
    );
    assert!(field.is_null());
    assert!(!last_error().is_empty());

    let heat = CString::new("heat1d").unwrap();
    assert_eq!(
        unsafe { pds_simulate(heat.as_ptr(), -1.0, 0, &mut field) },
        PdsStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { pds_simulate(ptr::null(), 0.0, 0, &mut field) },
        PdsStatus::NullPointer
    );
    assert_eq!(
        unsafe { pds_simulate(heat.as_ptr(), 0.0, 0, ptr::null_mut()) },
        PdsStatus::NullPointer
    );

    let missing = CString::new("/nonexistent/field.bin").unwrap();
    assert_eq!(unsafe { pds_field_load(missing.as_ptr(), &mut field) }, PdsStatus::Io);

    let field = simulate("heat1d", 0.0);
    let mut model = ptr::null_mut();
    let bad = CString::new(r#"{"vb": {"p0": 3.0}}"#).unwrap();
    assert_eq!(
        unsafe { pds_discover(field, bad.as_ptr(), 0, &mut model) },
        PdsStatus::Config
    );
    assert!(last_error().contains("p0"), "{}", last_error());
    let typo = CString::new(r#"{"vbb": {}}"#).unwrap();
    assert_eq!(
        unsafe { pds_discover(field, typo.as_ptr(), 0, &mut model) },
        PdsStatus::Config
    );
    let trimmed = CString::new(r#"{"dict": {"trim": 500}}"#).unwrap();
    assert_eq!(
        unsafe { pds_discover(field, trimmed.as_ptr(), 0, &mut model) },
        PdsStatus::Computation
    );
    assert!(model.is_null());

    assert_eq!(unsafe { pds_model_num_terms(ptr::null()) }, 0);
    assert_eq!(
        unsafe { pds_model_label(ptr::null(), 0, ptr::null_mut(), 0, ptr::null_mut()) },
        PdsStatus::NullPointer
    );
    unsafe {
        pds_field_free(field);
        pds_field_free(ptr::null_mut());
        pds_model_free(ptr::null_mut());
    }
}

#[test]
fn truncated_strings_stay_terminated() {
    let field = simulate("wave1d", 0.0);
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { pds_discover(field, ptr::null(), 0, &mut model) },
        PdsStatus::Ok
    );
    let mut buf = [0x7f as c_char; 6];
    let mut needed = 0usize;
    unsafe { pds_model_equation(model, buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert!(needed > 5);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "u_tt ");
    assert_eq!(
        unsafe { pds_model_label(model, 1000, ptr::null_mut(), 0, ptr::null_mut()) },
        PdsStatus::InvalidArgument
    );
    unsafe {
        pds_model_free(model);
        pds_field_free(field);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(pds_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cxx() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pdesift.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pds_simulate",
        "pds_discover",
        "pds_model_free",
        "PDS_STATUS_COMPUTATION",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        match Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
        {
            Ok(status) => assert!(status.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not available; skipping"),
        }
    }
}

/// Builds the C example against the shared library produced alongside this
/// test binary and runs it.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    if !lib_dir.join("libpdesift_ffi.so").exists() {
        eprintln!("shared library not found next to the test binary; skipping");
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let program = out.path().join("discover");
    let compiled = Command::new("cc")
        .arg(crate_dir.join("examples/discover.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(lib_dir)
        .args(["-lpdesift_ffi", "-o"])
        .arg(&program)
        .status();
    match compiled {
        Ok(status) => assert!(status.success(), "C example failed to compile"),
        Err(_) => {
            eprintln!("cc not available; skipping");
            return;
        }
    }
    let run = Command::new(&program).env("LD_LIBRARY_PATH", lib_dir).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("u_t = "), "{stdout}");
    assert!(lines[1].starts_with("u_xx 1.000"), "{stdout}");
    assert!(lines[2].starts_with("u*u_x 1.000"), "{stdout}");
}
