from concurrent.futures import Executor, ThreadPoolExecutor


def get_executor(workers: int = 1, executor: Executor = None):
    """Retrieves the executor independent work items are mapped over

    :param workers: the number of threads to use when no executor is injected; 1 runs in the calling thread
    :param executor: an optional instantiated executor to inject
    :return: the injected executor, a new thread pool, or None for in-thread evaluation
    """
    # Assume the caller's executor if provided with one
    if executor:
        return executor
    if workers and workers > 1:
        return ThreadPoolExecutor(max_workers=workers)
    return None


def ordered_map(function, items, workers: int = 1, executor: Executor = None) -> list:
    """Evaluates function over items, possibly concurrently, returning results in input order

    :param function: a pure function of one item
    :param items: the work items
    :param workers: the number of threads to use when no executor is injected
    :param executor: an optional instantiated executor to inject
    :return: a list with one result per item, in the order of items
    """
    items = list(items)
    pool = get_executor(workers, executor)
    if pool is None:
        return [function(item) for item in items]
    if pool is executor:
        return list(pool.map(function, items))
    with pool:
        return list(pool.map(function, items))
