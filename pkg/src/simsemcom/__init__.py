"""Stacked diffractive metasurface simulation and pattern synthesis.

A single transmit antenna illuminates a stack of programmable metasurface
layers; the output field reaches a planar receive array over a Rician
channel. The per-atom amplitudes and phases are trained by gradient descent
so the normalized received energy reproduces a binary target image, while
PSK symbols ride on the same wave and are recovered by MRC.
"""

from simsemcom.geometry import ReceiverGeometry, SimGeometry
from simsemcom.diffraction import PropagationSet, StackState, build_propagation
from simsemcom.channel import Channel, ChannelParams, sample_channel, perturb_channel
from simsemcom.link import PskConfig
from simsemcom.optimizer import TrainConfig, TrainReport, train
from simsemcom.patterns import TargetPattern

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ChannelParams",
    "PropagationSet",
    "PskConfig",
    "ReceiverGeometry",
    "SimGeometry",
    "StackState",
    "TargetPattern",
    "TrainConfig",
    "TrainReport",
    "build_propagation",
    "perturb_channel",
    "sample_channel",
    "train",
]
