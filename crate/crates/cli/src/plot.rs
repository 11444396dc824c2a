use std::fs;
use std::path::Path;

use crate::output::MANIFEST;
use crate::CliError;

const SWEEP: &str = r#"import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open("sweep_summary.csv")) if r["status"] == "ok"]
x = [float(r["two_pi_over_alpha"]) for r in rows]
n = [float(r["n_r_final"]) for r in rows]
e = [float(r["amplitude"]) for r in rows]
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].errorbar(x, n, yerr=e, marker="o", label=rows[0]["direction"] if rows else "")
ax[0].plot(x, [1 - __import__("math").exp(-v) for v in x], "k--", label="p_LZ")
ax[0].set_xscale("log")
ax[0].set_xlabel("2pi/alpha")
ax[0].set_ylabel("n_R")
ax[0].legend()
ax[1].plot(x, [float(r["k2_l_final"]) for r in rows], marker="o", label="<k^2>_L final")
ax[1].axhline(float(rows[0]["k2_l_initial"]) if rows else 0, color="k", ls=":", label="initial")
ax[1].set_xscale("log")
ax[1].set_xlabel("2pi/alpha")
ax[1].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "sweep.png", dpi=150)
"#;

const QUENCH: &str = r#"import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open("quench_summary.csv")) if r["status"] == "ok"]
d = [float(r["delta_f"]) for r in rows]
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].errorbar(d, [float(r["n_r_mean"]) for r in rows], yerr=[float(r["n_r_amplitude"]) for r in rows], marker="o")
ax[0].set_xlabel("Delta_f")
ax[0].set_ylabel("n_R")
ax[1].errorbar(d, [float(r["k2_l_mean"]) for r in rows], yerr=[float(r["k2_l_amplitude"]) for r in rows], marker="o", label="L")
ax[1].errorbar(d, [float(r["k2_r_mean"]) for r in rows], yerr=[float(r["k2_r_amplitude"]) for r in rows], marker="s", label="R")
ax[1].set_xlabel("Delta_f")
ax[1].set_ylabel("<k^2>")
ax[1].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "quench.png", dpi=150)
"#;

const DOUBLEWELL: &str = r#"import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open("doublewell_summary.csv")) if r["status"] == "ok"]
x = [float(r["two_pi_over_alpha"]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 3.5))
for key, style in [("analytic_ground_state", "b-"), ("integrated_ground_state", "bo"), ("analytic_inverse", "r-"), ("integrated_inverse", "rs")]:
    ax.plot(x, [float(r[key]) for r in rows], style, label=key)
ax.plot(x, [float(r["p_lz"]) for r in rows], "k--", label="p_LZ")
ax.set_xscale("log")
ax.set_xlabel("2pi/alpha")
ax.set_ylabel("n_R")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "doublewell.png", dpi=150)
"#;

const THERMAL: &str = r#"import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open("thermal_summary.csv")) if r["status"] == "ok"]
d = [float(r["delta_f"]) for r in rows]
fig, ax = plt.subplots(1, 3, figsize=(12, 3.5))
ax[0].plot(d, [float(r["n_r"]) for r in rows], "o-", label="canonical")
ax[0].plot(d, [float(r["ideal_n_r"] or "nan") for r in rows], "s--", label="ideal gas")
ax[0].set_ylabel("n_R")
ax[1].plot(d, [float(r["k2_l"]) for r in rows], "o-", label="canonical")
ax[1].plot(d, [float(r["ideal_k2_l"] or "nan") for r in rows], "s--", label="ideal gas")
ax[1].set_ylabel("<k^2>_L")
ax[2].plot(d, [float(r["beta"]) for r in rows], "o-")
ax[2].axhline(0, color="k", lw=0.5)
ax[2].set_ylabel("beta")
for a in ax:
    a.set_xlabel("Delta_f")
ax[0].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "thermal.png", dpi=150)
"#;

/// Drops a matplotlib script next to every summary CSV in `dir`.
pub fn write_scripts(dir: &Path) -> Result<Vec<String>, CliError> {
    if !dir.join(MANIFEST).exists() {
        return Err(CliError::Setup(format!("{} holds no run manifest; run a job first", dir.display())));
    }
    let mut written = Vec::new();
    for (csv, script, body) in [
        ("sweep_summary.csv", "plot_sweep.py", SWEEP),
        ("quench_summary.csv", "plot_quench.py", QUENCH),
        ("doublewell_summary.csv", "plot_doublewell.py", DOUBLEWELL),
        ("thermal_summary.csv", "plot_thermal.py", THERMAL),
    ] {
        if dir.join(csv).exists() {
            let path = dir.join(script);
            fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path.display().to_string());
        }
    }
    Ok(written)
}
