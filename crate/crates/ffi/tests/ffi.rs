use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use trawl_core::cumulant::{integral_components, integrated_cumulant};
use trawl_core::simulator::{run_ensemble, EnsembleConfig, DEFAULT_CELL_BUDGET};
use trawl_core::{SeedSpec, TrawlGeometry, TrawlSpec};
use trawl_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { trawl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn gamma(alpha: f64) -> *mut TrawlGeom {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { trawl_geometry_new_gamma(alpha, &mut g) }, TrawlStatus::Ok);
    g
}

fn poisson(nu: f64) -> *mut TrawlSeed {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { trawl_seed_new_poisson(nu, true, &mut s) }, TrawlStatus::Ok);
    s
}

#[test]
fn geometry_matches_core() {
    let g = gamma(0.5);
    let core = TrawlGeometry::new(TrawlSpec::gamma(0.5).unwrap()).unwrap();
    let (mut leb, mut gh, mut r) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(trawl_geometry_leb(g, &mut leb), TrawlStatus::Ok);
        assert_eq!(trawl_geometry_tail_mass(g, 3.0, &mut gh), TrawlStatus::Ok);
        assert_eq!(trawl_geometry_correlation(g, 3.0, &mut r), TrawlStatus::Ok);
        trawl_geometry_free(g);
    }
    assert_eq!(leb, core.leb_a());
    assert_eq!(gh, core.tail_mass(3.0).unwrap());
    assert_eq!(r, 0.5);
}

#[test]
fn cumulants_match_core() {
    let g = gamma(0.5);
    let s = poisson(1.0);
    let core = TrawlGeometry::new(TrawlSpec::gamma(0.5).unwrap()).unwrap();
    let seed = SeedSpec::poisson(1.0).unwrap();
    let mut comps = TrawlComponents::default();
    let (mut k4, mut var) = (0.0, 0.0);
    unsafe {
        assert_eq!(trawl_integral_components(g, 4, 50.0, &mut comps), TrawlStatus::Ok);
        assert_eq!(trawl_integrated_cumulant(g, s, 4, 50.0, &mut k4), TrawlStatus::Ok);
        assert_eq!(trawl_discrete_sum_variance(g, s, 0.1, 20, &mut var), TrawlStatus::Ok);
        trawl_seed_free(s);
        trawl_geometry_free(g);
    }
    let c = integral_components(&core, 4, 50.0).unwrap();
    assert_eq!([comps.i1, comps.i2, comps.i3, comps.i4], [c.i1, c.i2, c.i3, c.i4]);
    assert_eq!(k4, integrated_cumulant(&core, &seed, 4, 50.0).unwrap());
    assert!(var > 0.0);
}

#[test]
fn ensemble_round_trip_is_thread_independent() {
    let g = gamma(0.5);
    let s = poisson(1.0);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    let (mut rows, mut cols) = (0, 0);
    let mut xa = vec![0.0; 6 * 21];
    let mut xb = vec![0.0; 6 * 21];
    let mut xs = vec![0.0; 6 * 21];
    let (mut acf, mut se) = (0.0, 0.0);
    unsafe {
        assert_eq!(trawl_ensemble_run(g, s, 0.1, 20, 6, 11, 1, &mut a), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_run(g, s, 0.1, 20, 6, 11, 3, &mut b), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_shape(a, &mut rows, &mut cols), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_copy_x(a, xa.as_mut_ptr(), xa.len()), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_copy_x(b, xb.as_mut_ptr(), xb.len()), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_copy_xstar(a, xs.as_mut_ptr(), xs.len()), TrawlStatus::Ok);
        assert_eq!(trawl_ensemble_acf(a, 1, &mut acf, &mut se), TrawlStatus::Ok);
        assert_eq!(
            trawl_ensemble_copy_x(a, xa.as_mut_ptr(), xa.len() - 1),
            TrawlStatus::BufferTooSmall
        );
        trawl_ensemble_free(a);
        trawl_ensemble_free(b);
        trawl_seed_free(s);
        trawl_geometry_free(g);
    }
    assert_eq!((rows, cols), (6, 21));
    assert_eq!(xa, xb);
    let core = run_ensemble(
        &EnsembleConfig {
            trawl: TrawlSpec::gamma(0.5).unwrap(),
            seed: SeedSpec::poisson(1.0).unwrap(),
            delta: 0.1,
            n: 20,
            replications: 6,
            master_seed: 11,
            cell_budget: DEFAULT_CELL_BUDGET,
        },
        None,
    )
    .unwrap();
    assert_eq!(xa, core.x_values());
    assert_eq!(xs, core.xstar_values());
    assert!(acf.is_finite() && se > 0.0);
}

#[test]
fn errors_map_to_status_codes() {
    let mut g = ptr::null_mut();
    let mut s = ptr::null_mut();
    let mut e = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(trawl_geometry_new_gamma(-1.0, &mut g), TrawlStatus::Domain);
        assert!(g.is_null());
        assert!(last_error().contains("alpha"), "{}", last_error());
        assert_eq!(trawl_geometry_new_exponential(0.0, &mut g), TrawlStatus::Domain);
        assert_eq!(trawl_seed_new_gamma(1.0, -2.0, false, &mut s), TrawlStatus::Domain);
        assert_eq!(trawl_geometry_new_gamma(0.5, ptr::null_mut()), TrawlStatus::NullPointer);
        assert_eq!(trawl_geometry_leb(ptr::null(), &mut v), TrawlStatus::NullPointer);

        let geom = gamma(0.5);
        let seed = poisson(1.0);
        assert_eq!(trawl_geometry_tail_mass(geom, -1.0, &mut v), TrawlStatus::Domain);
        assert_eq!(
            trawl_ensemble_run(geom, seed, 0.1, 100_000, 10_000, 0, 0, &mut e),
            TrawlStatus::Budget
        );
        assert!(e.is_null());
        assert!(last_error().contains("n <="));
        trawl_seed_free(seed);
        trawl_geometry_free(geom);
        trawl_geometry_free(ptr::null_mut());
        trawl_seed_free(ptr::null_mut());
        trawl_ensemble_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(trawl_geometry_new_gamma(f64::NAN, &mut g), TrawlStatus::Domain);
        let mut buf = [1 as std::ffi::c_char; 4];
        let n = trawl_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(n > 3);
        assert_eq!(buf[3], 0);
        assert_eq!(trawl_last_error_message(ptr::null_mut(), 0), n);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(trawl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/trawl.h")).unwrap();
    for sym in [
        "typedef struct TrawlGeom TrawlGeom;",
        "typedef struct TrawlSeed TrawlSeed;",
        "typedef struct TrawlEnsemble TrawlEnsemble;",
        "TRAWL_STATUS_BUFFER_TOO_SMALL = 9",
        "trawl_ensemble_run(",
        "trawl_integrated_cumulant(",
        "trawl_last_error_message(char *buf, size_t len)",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests/<exe> lives in target/<profile>/deps next to the library
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libtrawl_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("4 11 "), "{stdout}");
}
