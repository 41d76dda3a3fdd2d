/*
Copyright 2026 The erspace Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! The generated header against the exported symbols, and a C program built
//! against it.

use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let src = std::fs::read_to_string(manifest().join("src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(manifest().join("include/erspace.h")).unwrap();
    let names: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| rest.split('(').next().unwrap().trim())
        .collect();
    assert!(names.len() >= 10, "{names:?}");
    for n in names {
        assert!(header.contains(&format!("{n}(")), "{n} missing from the header");
    }
    for c in ["ER_STATUS_OK = 0", "ER_STATUS_PANIC = 8", "ER_FAILURE_UNREACHABLE = 4", "ER_SPACE_ERJ = 3"] {
        assert!(header.contains(c), "{c}");
    }
}

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps; the archive sits there or one up
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps.to_path_buf(), deps.parent()?.to_path_buf()]
        .into_iter()
        .map(|d| d.join("liberspace_ffi.a"))
        .find(|p| p.exists())
}

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "erspace.h"

int main(void) {
    ErChain *chain = NULL;
    if (er_chain_load("srs7", &chain) != ER_STATUS_OK) return 10;
    if (er_chain_dof(chain) != 7) return 11;
    double q[7] = {0, 0, 0, 0, 0, 0, 0};
    double pose[7];
    if (er_forward_kinematics(chain, q, 7, pose) != ER_STATUS_OK) return 12;
    if (fabs(pose[2] - 1.24) > 1e-12 || pose[3] != 1.0) return 13;
    if (er_forward_kinematics(chain, q, 6, pose) != ER_STATUS_DIMENSION_MISMATCH) return 14;
    if (er_last_error_message() == NULL) return 15;
    double seed[7] = {0.3, 0.5, -0.4, -1.6, 0.7, 1.4, -0.2};
    double delta[7] = {0, 0, 0, 1, 0, 0, 0};
    double shift = 0.2, out[7];
    ErFailure failure;
    if (er_translate(chain, ER_SPACE_ERJ, ER_MODE_DELTA, delta, &shift, 1, seed, 7, NULL, 0, out, &failure) != ER_STATUS_OK)
        return 16;
    if (failure != ER_FAILURE_NONE || out[0] != seed[0] + 0.2) return 17;
    er_chain_free(chain);
    printf("ok\n");
    return 0;
}
"#;

fn compile_and_run(tmp: &Path, lib: &Path) -> std::process::Output {
    let src = tmp.join("smoke.c");
    let exe = tmp.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(&src)
        .arg(lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success(), "compiling the smoke program failed");
    Command::new(&exe).output().unwrap()
}

#[test]
fn c_program_links_and_runs() {
    let lib = static_lib().expect("cargo builds the static library next to the test binary");
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-smoke");
    std::fs::create_dir_all(&tmp).unwrap();
    let out = compile_and_run(&tmp, &lib);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
