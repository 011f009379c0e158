import pytest

from dmdfault.experiments import flight_config, gk_config, gk_experiment
from dmdfault.pipeline import fit_lti
from dmdfault.simulators import FlightSimConfig, flight_simulate, gk_simulate


@pytest.fixture(scope="session")
def gk_clean():
    return gk_simulate()


@pytest.fixture(scope="session")
def gk_lti(gk_clean):
    return fit_lti(gk_clean, gk_config())


@pytest.fixture(scope="session")
def flight_clean():
    return flight_simulate(FlightSimConfig())


@pytest.fixture(scope="session")
def flight_lti(flight_clean):
    return fit_lti(flight_clean, flight_config())


@pytest.fixture(scope="session")
def gk_model(gk_clean, gk_lti):
    return gk_experiment(clean=gk_clean, lti=gk_lti).model
