"""
String-pull bending of the tarsal chain
=======================================

Walks the tendon-driven tarsus through its pull range: per-joint bend
angles, the 5.5 mm full-bend pull, overload into axial compression and
socket slack up to the 13.1 mm bench figure, the spring restoring force,
and the rigid/flexible stiffness curves.

Run:  python demos/01_chain_bending.py
"""

import os

import numpy as np

from tarsim.chain import (chain_pull, default_chain_geometry, full_bend_pull,
                          max_chain_pull, restoring_force,
                          solve_bend_from_pull, stiffness_curve,
                          total_bend_angle)
from tarsim.svgplot import line_chart

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

chain = default_chain_geometry()
print("Default calibrated chain:")
for i, seg in enumerate(chain.segments, start=1):
    print(f"  tarsomere {i}: radius {seg.radius:6.3f} mm, "
          f"rest span {seg.rest_span:6.3f} mm, "
          f"max bend {np.degrees(seg.max_bend):6.3f} deg")
print(f"full-bend pull : {full_bend_pull(chain):.6f} mm")
print(f"full-bend angle: {np.degrees(chain.max_bend.sum()):.1f} deg")

# sweep the commanded pull through bending into compression and slack
measured = default_chain_geometry(socket_slack=True)
print(f"\nwith socket slack the capacity grows to "
      f"{max_chain_pull(measured):.1f} mm:")
pulls = np.linspace(0.0, max_chain_pull(measured), 60)
bend = []
force = []
for p in pulls:
    st = solve_bend_from_pull(measured, float(p))
    bend.append(total_bend_angle(st))
    force.append(restoring_force(measured, st))
for p in (0.0, 2.75, 5.5, 10.2, 13.1):
    st = solve_bend_from_pull(measured, p)
    print(f"  pull {p:5.2f} mm -> bend {total_bend_angle(st):6.2f} deg, "
          f"compression {st.compression.sum():5.2f} mm, "
          f"slack {st.slack.sum():5.2f} mm, pull check "
          f"{chain_pull(measured, st):6.3f} mm")

line_chart(os.path.join(OUT, "bend_vs_pull.svg"),
           [("total bend (deg)", pulls, bend)],
           title="Tarsal bend vs string pull",
           xlabel="string pull (mm)", ylabel="bend (deg)")
line_chart(os.path.join(OUT, "spring_force.svg"),
           [("spring force (N)", pulls, force)],
           title="Return-spring force", xlabel="string pull (mm)",
           ylabel="force (N)")

# two-regime stiffness: taut string vs relaxed string
disp = np.linspace(0.0, 7.0, 141)
rigid = stiffness_curve(chain, "rigid", disp)
flexible = stiffness_curve(chain, "flexible", disp)
line_chart(os.path.join(OUT, "stiffness.svg"),
           [("rigid", disp, rigid), ("flexible", disp, flexible)],
           title="Vertical stiffness by actuation mode",
           xlabel="pressed displacement (mm)", ylabel="force (N)")
print(f"\nrigid-mode force saturates at {rigid.max():.2f} N; "
      f"flexible mode stays {chain.k_rigid / chain.k_flex:.0f}x softer")
print(f"plots written to {OUT}/")
