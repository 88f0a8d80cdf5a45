"""Run the blocking designs over seeded random networks and tabulate."""

import time

import numpy as np

from obsblock import (Claims, algorithm2, build_matrices, cutset_design,
                      regional_stable_design, verify_design)
from obsblock.generators import (random_blocking_instance, random_cut_instance,
                                 random_regional_instance)


def run(name, make, design, count):
    t0 = time.perf_counter()
    passed = 0
    for seed in range(count):
        model = make(seed)
        mats = build_matrices(model)
        F, mode = design(mats, model, seed)
        passed += verify_design(mats, F, Claims(mode=mode)).passed
    dt = time.perf_counter() - t0
    print(f"{name:<18} {passed:>3}/{count} verified in {dt:5.2f} s")


def block(mats, model, seed):
    p = int(np.random.default_rng(seed).integers(mats.n))
    d = algorithm2(mats, p)
    return d.gain, d.unobservable_mode


def cutset(mats, model, seed):
    d = cutset_design(model)
    return d.gain, d.unobservable_mode


def regional(mats, model, seed):
    d = regional_stable_design(model)
    return d.F, d.unobservable_mode


run("single mode", random_blocking_instance, block, 100)
run("cutset", random_cut_instance, cutset, 100)
run("regional, stable", random_regional_instance, regional, 50)
