"""Slow and fast light from a single artificial atom in front of a mirror.

Rates are angular (rad/s) throughout the library; use ``MHZ`` to convert.
"""
from .errors import *  # noqa: F401,F403
from .params import (MHZ, TWO_PI, AtomParams, DriveSpec, EffectiveRates, Envelope,
                     LineCalibration, ats_threshold_rabi, control_coupling, dbm_to_rabi,
                     dbm_to_watts, effective_rates, rabi_to_dbm, singular_control_rabi,
                     singular_probe_rabi)
from .spectrum import (ComplexSpectrum, DelayProfile, SweepMap, delay_profile_analytic,
                       group_delay_analytic, group_delay_numeric, reflection_powered,
                       reflection_two_tone, reflection_weak, sweep_map, transfer_function,
                       zero_delay_boundary)
from .timedomain import (DelayEstimate, PulseTrace, extract_delay, gaussian_probe,
                         integrate_bloch, input_output, narrowband_output, simulate_output)
from .estimation import (FitResult, circle_fit, fit_power_dependence, fit_two_tone,
                         fit_weak_spectrum)
from .io import load_device

__version__ = "0.1.0"
