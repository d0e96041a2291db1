import numpy as np
import pytest

import maxminsense as mms


@pytest.fixture(scope="session")
def spec02():
    return mms.PulseSpec(rolloff=0.2, symbol_period_s=1.0)


@pytest.fixture(scope="session")
def weights02(spec02):
    return mms.design_combiner(spec02)


@pytest.fixture(scope="session")
def ofdm_default():
    return mms.OfdmConfig()


def make_noise(n, seed, dtype=np.complex128):
    rng = np.random.default_rng(seed)
    real_dtype = np.float32 if dtype == np.complex64 else np.float64
    return rng.standard_normal(2 * n, dtype=real_dtype).view(dtype) / np.sqrt(
        real_dtype(2.0)
    )
