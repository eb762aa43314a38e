from concurrent.futures import ThreadPoolExecutor

from boxcoxseg.utils import executor


def test_get_executor():
    """Tests executor.get_executor function"""
    assert executor.get_executor() is None
    assert executor.get_executor(0) is None
    pool = executor.get_executor(3)
    assert isinstance(pool, ThreadPoolExecutor)
    pool.shutdown()
    injected = ThreadPoolExecutor(max_workers=2)
    assert executor.get_executor(8, injected) is injected
    injected.shutdown()


def test_ordered_map():
    """Tests results keep the input order in thread and pool evaluation"""
    items = list(range(50))
    assert executor.ordered_map(lambda x: x * x, items) == [x * x for x in items]
    assert executor.ordered_map(lambda x: x * x, iter(items), workers=4) == [x * x for x in items]


def test_ordered_map_leaves_injected_executor_open():
    """Tests an injected executor is not shut down by the map"""
    with ThreadPoolExecutor(max_workers=2) as pool:
        assert executor.ordered_map(str, [1, 2], executor=pool) == ["1", "2"]
        assert pool.submit(len, "abc").result() == 3
