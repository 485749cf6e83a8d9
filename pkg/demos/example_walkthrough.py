"""Four coupled subsystems, one of them attacked with a locally stealthy cover.

Loads the bundled scenario, runs the detector with and without the attack and
prints a one-line timeline per run. Writes CSV output to ``out/demo``.
"""

import numpy as np

from hierdetect import load_scenario, run, emit

cfg = load_scenario("paper_example")
print(f"{cfg.model.size} subsystems, dt = {cfg.model.dt} s, horizon {cfg.horizon} steps")
print(f"safety factor on the tracking-error bound: {cfg.monitor.safety_factor:.3f}")

nominal = run(cfg.nominal(), compute_if=False)
attacked = run(cfg)


def timeline(out):
    return "".join("X" if e else "." for e in out.empty)


print("nominal  ", timeline(nominal))
print("attacked ", timeline(attacked))
print("           each character is 0.25 s; X marks an empty intersection")

s = attacked.summary()
print(f"first detection at {s['first_detection_time']} s, duty cycle {s['detection_duty_cycle']:.0%}")
print("i_f (every 4th step):", np.round(attacked.i_f[::4], 2))

# The attacked subsystem's own transmitted estimate is indistinguishable from
# nominal; detection comes from its neighbor's estimate.
gap = np.abs(attacked.d_hat_la - nominal.d_hat_la).max(axis=0).reshape(4, 2).max(axis=1)
print("largest change of each transmitted estimate:", gap.round(4))

paths = emit(attacked, "out/demo")
print("wrote", ", ".join(p.name for p in paths))
