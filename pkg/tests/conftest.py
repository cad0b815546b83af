import pytest

from threetrees import ThreeTreeEmbedding, build_instance, load_config


@pytest.fixture(scope="session")
def instance_a():
    return build_instance(load_config("instance_a"))


@pytest.fixture(scope="session")
def instance_b():
    return build_instance(load_config("instance_b"))


@pytest.fixture(scope="session")
def complex_a(instance_a):
    return instance_a[1]


@pytest.fixture(scope="session")
def complex_b(instance_b):
    return instance_b[1]


@pytest.fixture(scope="session")
def emb_a(complex_a):
    return ThreeTreeEmbedding().fit(complex_a)


@pytest.fixture(scope="session")
def emb_b(complex_b):
    return ThreeTreeEmbedding().fit(complex_b)
