"""Regenerates the physics reference traces from Gymnasium.

    python3 generate.py

Each CSV row (1000 steps, random actions) holds the state before a step, the action, the state after it,
the reward and the terminal flag. Mountain Car's step is re-executed with its
float32 state cast removed so the trace stays in float64; Acrobot already
keeps float64 state internally.
"""

import csv
import inspect
import math
import textwrap
from pathlib import Path

import gymnasium as gym
import numpy as np
from gymnasium.envs.classic_control import continuous_mountain_car

STEPS = 1000
SEEDS = [0, 1, 2]
HERE = Path(__file__).resolve().parent


def float64_mountain_car_step():
    src = textwrap.dedent(inspect.getsource(continuous_mountain_car.Continuous_MountainCarEnv.step))
    src = src.replace("dtype=np.float32", "dtype=np.float64")
    namespace = {"np": np, "math": math}
    exec(src, namespace)
    return namespace["step"]


def fmt(x):
    return repr(float(x))


def mountain_car(seed, pump=False):
    env = gym.make("MountainCarContinuous-v0").unwrapped
    step = float64_mountain_car_step()
    env.reset(seed=seed)
    env.state = env.state.astype(np.float64)
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(STEPS):
        before = env.state.copy()
        action = rng.uniform(-1.0, 1.0)
        if pump:
            action = float(np.clip(np.sign(before[1]) + 0.5 * action, -1.0, 1.0))
        state, reward, terminated, _, _ = step(env, np.array([action]))
        rows.append([t, *map(fmt, before), fmt(action), *map(fmt, state), fmt(reward), int(terminated)])
    return ["step", "pos", "vel", "action", "next_pos", "next_vel", "reward", "terminated"], rows


def acrobot(seed, pump=False):
    env = gym.make("Acrobot-v1").unwrapped
    env.reset(seed=seed)
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(STEPS):
        before = np.array(env.state, dtype=np.float64)
        action = int(rng.integers(0, 3))
        if pump and rng.random() < 0.8:
            action = 2 if before[3] > 0 else 0
        _, reward, terminated, _, _ = env.step(action)
        rows.append([t, *map(fmt, before), action, *map(fmt, env.state), fmt(reward), int(terminated)])
    names = ["theta1", "theta2", "dtheta1", "dtheta2"]
    header = ["step", *names, "action", *(f"next_{n}" for n in names), "reward", "terminated"]
    return header, rows


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    for name, trace in [("mountain_car", mountain_car), ("acrobot", acrobot)]:
        for seed in SEEDS:
            write(HERE / f"{name}_seed{seed}.csv", *trace(seed))
        # Mostly energy-pumping actions, so goal states show up.
        write(HERE / f"{name}_pump.csv", *trace(len(SEEDS), pump=True))


if __name__ == "__main__":
    main()
