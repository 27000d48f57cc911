"""Desk-scale rig for tokenized robot-action policies.

Action codec, dataset curation and mixture sampling, a linear-softmax token
policy, a framed TCP inference server and a blocking/non-blocking evaluation
harness on a kinematic pick-and-place world.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
