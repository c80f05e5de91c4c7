"""Walk through the beam model, the radius correction and one hologram capture.

    python3 demos/01_modes_and_holograms.py [out_dir]

Writes a few PNGs to ``out_dir`` (default ``demo_out/modes``).
"""

import math
import sys
from pathlib import Path

from hgmodes.dataset import save_png
from hgmodes.holo import (
    OpticalTrainConfig,
    correlation,
    encode_target,
    hologram_target,
    sample_pexp_params,
    save_phase_png,
    simulate_capture,
)
from hgmodes.physics import (
    BeamSpec,
    ModePair,
    SensorGeometry,
    beta,
    field2d,
    intensity,
    second_moment_radius,
)
from hgmodes.simgen import render

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/modes")
out.mkdir(parents=True, exist_ok=True)

# The D4-sigma radius of HG_n grows like sqrt(2n+1) times the input radius,
# so beta(n) undoes that when we want a given measured size.
print(" n   beta(n)    1/sqrt(2n+1)")
for n in range(6):
    print(f"{n:2d}   {beta(n):.6f}   {1 / math.sqrt(2 * n + 1):.6f}")

# Render HG(2,3) with and without the correction and measure both.
geom = SensorGeometry(128)
target = 12.0
mode = ModePair(2, 3)
for label, (wa, wb) in {"raw": (target, target),
                        "corrected": (beta(2) * target, beta(3) * target)}.items():
    img = intensity(field2d(BeamSpec(mode, wa, wb), geom))
    mom = second_moment_radius(img)
    print(f"{label:>9}: measured radii {mom.w_sx:.2f}, {mom.w_sy:.2f} px (target {target})")
    save_png(img.values / img.values.max(), out / f"hg23_{label}.png")

# One pseudo-experimental capture: encode the target field as a phase-only
# hologram, propagate through the lens and crop the first diffraction order.
cfg = OpticalTrainConfig(out_px=128)
p = sample_pexp_params(ModePair(1, 2), cfg, seed=0, index=0)
holo = encode_target(hologram_target(p, cfg), cfg)
save_phase_png(holo, out / "hg12_phase.png")
cap = simulate_capture(p, cfg)
ref = render(p, cfg.camera_geometry)
save_png(cap.values / cap.values.max(), out / "hg12_capture.png")
save_png(ref.values / ref.values.max(), out / "hg12_target.png")
print(f"capture vs target correlation: {correlation(cap, ref):.4f}")
print(f"hologram phase spans [{holo.phase.min():.2f}, {holo.phase.max():.2f}] rad over "
      f"{holo.phase.shape[0]}x{holo.phase.shape[1]} pixels")
print(f"wrote images to {out}")
