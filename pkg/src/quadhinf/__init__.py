"""Quadrotor attitude identification and robust H-infinity control toolkit.

Subpackages cover the full design pipeline: LTI primitives (`lti`),
closed-loop frequency-domain identification (`sysid`), multiplicative
uncertainty modeling (`uncertainty`), mixed-sensitivity synthesis and
robustness analysis (`hinf`), a nonlinear attitude simulator
(`quadsim`), and a CLI orchestrating everything (`cli`).
"""

__version__ = "0.1.0"
