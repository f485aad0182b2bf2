"""The surface x0 = p1*x1*th1, th0 = 0 in (2|2) with the flat volume.

A_param at sample points should be a constant multiple of the dual formula,
and both should carry the odd constant p1.
"""
from fractions import Fraction

from oddsymp import A_param, EquationSurface, GraphSurface, ParamSurface, VarContext, VolumeForm, dual_A
from oddsymp.surfaces import FRAME_TO_DUAL

amb = VarContext.named(2, 1, start=0)
red = amb.reduced(0)
psi = amb.pi(0)

G = GraphSurface(amb, red.pi(0) * red.x(0) * red.theta(0), red.zero)
S = EquationSurface(amb.x(0) - psi * amb.x(1) * amb.theta(1), amb.theta(0), G)
dv = VolumeForm.flat(amb)
print("dual A        :", dual_A(S, dv))

P = VarContext.named(1, 1, even="xi", odd="eta")
frame = ParamSurface(amb, [P.pi(0) * P.x(0) * P.theta(0), P.x(0), P.zero, P.theta(0)])
for pt in (-1, Fraction(1, 2), 3):
    print(f"frame A at {pt!s:>4}:", A_param(frame, dv, [pt]), f"(expected {FRAME_TO_DUAL} * dual)")
