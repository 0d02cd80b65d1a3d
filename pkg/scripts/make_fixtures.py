"""Regenerate the shipped plan files and synthetic bundles in src/tmscatter/data/."""

from pathlib import Path
import json

from tmscatter.fixtures import F_M, Z_DIODE_OFF, Z_DIODE_ON, monopole_array
from tmscatter.formats import write_bundle

DATA = Path(__file__).resolve().parents[1] / "src" / "tmscatter" / "data"

PORT_LABELS = [3, 6, 9, 12, 15, 18, 21, 24, 27]

# (normalized delay, on-duty) per diode port
REGIMES = {
    "O": ([0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], [0.5] * 9),
    "II": ([0.23, 0.43, 0.32, 0.69, 0.51, 0.43, 0.55, 0.64, 0.56],
           [0.22, 0.2, 0.82, 0.48, 0.85, 0.5, 0.17, 0.17, 0.19]),
    "III": ([0.6, 0.32, 0.16, 0.67, 0.44, 0.3, 0.49, 0.73, 0.56],
            [0.7, 0.28, 0.73, 0.35, 0.83, 0.31, 0.24, 0.22, 0.71]),
    "IV": ([0.38, 0.29, 0.11, 0.71, 0.57, 0.31, 0.56, 0.51, 0.31],
           [0.54, 0.54, 0.62, 0.41, 0.43, 0.5, 0.42, 0.53, 0.48]),
    "V": ([0.71, 0.41, 0.13, 0.07, 0.27, 0.41, 0.29, 0.97, 0.72],
          [0.73, 0.3, 0.74, 0.19, 0.31, 0.29, 0.25, 0.28, 0.72]),
}


def pair(z):
    return f"[{z.real!r}, {z.imag!r}]"


def plan_text(name, delays, duties):
    lines = [
        f"# Regime {name}: diode bias schedule per port (delay to switch-on, on-duty).",
        "format_version = 1",
        f'regime = "{name}"',
        f"f_m_hz = {F_M!r}",
        "",
    ]
    for i, (label, r, d) in enumerate(zip(PORT_LABELS, delays, duties), start=1):
        lines += [
            "[[port]]",
            f"index = {i}",
            f"label = {label}",
            f"r_on = {float(r)!r}",
            f"duty_on = {float(d)!r}",
            f"z_on = {pair(Z_DIODE_ON)}",
            f"z_off = {pair(Z_DIODE_OFF)}",
            "",
        ]
    return "\n".join(lines)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for name, (delays, duties) in REGIMES.items():
        (DATA / f"regime_{name}.toml").write_text(plan_text(name, delays, duties))
    blocks, grid = monopole_array(coupling=1.0)
    write_bundle(blocks, grid, DATA / "monopole_array.json")
    blocks, grid = monopole_array(coupling=0.0)
    write_bundle(blocks, grid, DATA / "monopole_array_uncoupled.json")
    ctx = {"format_version": 1, "s_t_m": 1.8, "s_r_m": 1.8, "gain_tx": 8.0, "gain_rx": 8.0}
    (DATA / "chamber.json").write_text(json.dumps(ctx, indent=1) + "\n")


if __name__ == "__main__":
    main()
