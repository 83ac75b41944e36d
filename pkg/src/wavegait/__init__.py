"""wavegait: a deterministic multi-legged locomotion simulator.

Three traveling waves (leg stepping, lateral body undulation, vertical body
undulation) drive a quasi-kinematic robot over procedurally generated block
terrain; amplitude controllers (open-loop, contact-ratio proportional
feedback, or a PPO-trained policy) coordinate the waves cycle by cycle.
"""

__version__ = "0.1.0"
