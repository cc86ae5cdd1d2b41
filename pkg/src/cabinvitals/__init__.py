"""In-cabin vital-sign estimation from impulse-radio frames."""

__version__ = "0.1.0"
