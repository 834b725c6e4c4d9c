"""
Leg kinematics and trajectory retargeting
=========================================

Round-trips the four-joint leg through FK -> IK, then takes a synthetic
"recorded" foot path at insect scale, scales it up eight times onto the
robot leg, and replays it through the warm-started IK tracker.

Run:  python demos/02_leg_inverse_kinematics.py
"""

import os

import numpy as np

from tarsim.leg import (Trajectory, default_leg_model, forward_kinematics,
                        inverse_kinematics, retarget_trajectory,
                        trajectory_to_joints)
from tarsim.svgplot import line_chart

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

model = default_leg_model()
print(f"leg reach: {model.reach_mm():.0f} mm")

# FK -> IK round trip from a handful of poses
rng = np.random.default_rng(2024)
q_home = np.array([0.0, -0.3, 0.6, -0.9])
print("\nFK -> IK round trips:")
for _ in range(5):
    q_true = rng.uniform(model.lower, model.upper)
    target = forward_kinematics(model, q_true).position
    sol = inverse_kinematics(model, target, q_home)
    print(f"  target ({target[0]:7.1f}, {target[1]:7.1f}, {target[2]:7.1f}) "
          f"-> residual {sol.residual_mm:.2e} mm in {sol.iterations} iters")

# a beetle-scale swing path: stance drag, lift, swing forward, touch down
t = np.arange(0.0, 600.0, 10.0)
phase = 2 * np.pi * t / 600.0
beetle = Trajectory(t, np.column_stack([
    15.0 + 2.0 * np.cos(phase),
    0.4 * np.sin(phase),
    -7.0 + 1.5 * np.maximum(np.sin(phase), -0.2),
]))

robot = retarget_trajectory(beetle, scale=8.0, origin=(0.0, 0.0, 0.0))
d_b = np.linalg.norm(beetle.points[5] - beetle.points[40])
d_r = np.linalg.norm(robot.points[5] - robot.points[40])
print(f"\nretarget x8: sample pair distance {d_b:.3f} mm -> {d_r:.3f} mm "
      f"(ratio {d_r / d_b:.1f})")

qs = trajectory_to_joints(model, robot)
replay = np.array([forward_kinematics(model, q).position for q in qs])
err = np.linalg.norm(replay - robot.points, axis=1)
print(f"replayed through IK: max position error {err.max():.2e} mm, "
      f"max joint step {np.degrees(np.abs(np.diff(qs, axis=0)).max()):.2f} deg")

line_chart(os.path.join(OUT, "retargeted_path.svg"),
           [("beetle x8, z", robot.t_ms, robot.points[:, 2]),
            ("replayed z", robot.t_ms, replay[:, 2])],
           title="Retargeted foot height, commanded vs replayed",
           xlabel="time (ms)", ylabel="z (mm)")
line_chart(os.path.join(OUT, "joint_series.svg"),
           [(name, robot.t_ms, np.degrees(qs[:, k]))
            for k, name in enumerate(("coxa", "trochanter", "femur",
                                      "tibia"))],
           title="Joint angles along the retargeted path",
           xlabel="time (ms)", ylabel="angle (deg)")
print(f"plots written to {OUT}/")
