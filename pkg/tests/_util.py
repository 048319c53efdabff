from heatlab import BathSpec

ALPHA, OMEGA_C = 0.005, 10.0


def bath(t, label):
    """Ohmic bath with the coupling and cutoff shared by the shipped presets."""
    return BathSpec(ALPHA, OMEGA_C, t, label)
