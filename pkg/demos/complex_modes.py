"""Blocking an oscillatory mode needs two actuators beyond the sensor count.

Every node of this network carries either an actuator or a sensor, so the
blocking vector for a complex mode comes out real and cannot be paired with
its conjugate.  One more actuator fixes that.
"""

import numpy as np

from obsblock import (Claims, ConjugateDegenerate, algorithm2, build_matrices,
                      load_fixture, verify_design)
from obsblock.blocker import mode_spectrum

np.set_printoptions(precision=4, suppress=True)

model = load_fixture("example_conjugate")
mats = build_matrices(model)
lams = mode_spectrum(mats)
print("spectrum:", lams)
p = int(np.flatnonzero(lams.imag > 0)[0])

try:
    algorithm2(mats, p)
except ConjugateDegenerate as exc:
    print(f"\nq = {mats.q}: {exc}")

wider = build_matrices(model.with_nodes(actuation=(1, 2, 3, 4)))
p = int(np.flatnonzero(mode_spectrum(wider).imag > 0)[0])
design = algorithm2(wider, p)
print(f"\nq = {wider.q}: blocked {design.unobservable_mode:.4f}, "
      f"changed eigenvectors {design.modified}")
print("F =\n", design.gain)
report = verify_design(wider, design.gain,
                       Claims(mode=design.unobservable_mode,
                              preserve_spectrum=True,
                              preserved=design.preserved))
print("verification passed:", report.passed)
print("unobservable modes:", np.round(report.unobservable_modes, 4))
