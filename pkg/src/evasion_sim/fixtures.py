"""Shipped detection profiles (per-range physical-world measurements)."""

from __future__ import annotations

from importlib import resources

from evasion_sim.perception import DetectionProfile, load_profile

_PKG = "evasion_sim.data.profiles"

# (model, attack) columns of the system-level measurement table
TABLE3_BENIGN = {"Y2": "y2_benign", "Y3": "y3_benign", "Y5": "y5_benign", "FR": "fr_benign"}
TABLE3_ATTACKS = {("Y2", "RP2"): "y2_rp2", ("Y3", "SIB"): "y3_sib", ("Y3", "FTE"): "y3_fte",
                  ("Y5", "FTE"): "y5_fte", ("FR", "SIB"): "fr_sib"}
ABLATION_LABELS = ("original", "s1", "s2", "s1s2")
ABLATION_ATTACKS = {"RP2": ("rp2", "Y2"), "FTE-Y3": ("fte_y3", "Y3"), "FTE-Y5": ("fte_y5", "Y5")}


def names() -> list[str]:
    files = resources.files(_PKG).iterdir()
    return sorted(f.name[:-4] for f in files if f.name.endswith(".csv"))


def path(name: str):
    return resources.files(_PKG).joinpath(f"{name}.csv")


def profile(name: str) -> DetectionProfile:
    """Load ``table3_*`` / ``table4_*`` by name (with or without the table prefix)."""
    if not name.startswith("table"):
        candidates = [n for n in names() if n.split("_", 1)[1] == name]
        if len(candidates) != 1:
            raise KeyError(name)
        name = candidates[0]
    with resources.as_file(path(name)) as p:
        return load_profile(p)


def benign(model: str) -> DetectionProfile:
    return profile("table3_" + TABLE3_BENIGN[model])


def ablation_profiles(attack: str) -> dict[str, DetectionProfile]:
    stem, _ = ABLATION_ATTACKS[attack]
    return {label: profile(f"table4_{stem}_{label}") for label in ABLATION_LABELS}
