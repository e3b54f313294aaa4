messages = {
    "en_US": {
        "report": {
            "title": "Simulation study: true prior {true_family}, n={n}, replicates={replicates}, sigma_mean={sigma_mean}",
            "mode": "Parameters: {mode}",
            "cell": "  {estimating:<12} loss={loss:.6g} (se {se:.3g})  param={param}  failed={failed}",
            "param": "{mean:.4g} ({sd:.4g})",
            "no_param": "-",
            "prediction": "Spearman (theory vs simulation, off-diagonal): {rho:.3f}",
        },
        "cli": {
            "rejected": "rejected line {line}: {reason}",
            "rejects_total": "{count} rows rejected",
            "naive_variance": "naive method-of-moments tau^2 = {value:.10g}",
            "written": "written {path}",
            "usage_error": "error: {error}",
            "numerical_error": "numerical failure: {error}",
            "fetched": "fetched {name} -> {path}",
        },
        "figure": {
            "title": "Isotaxes under the {prior} prior (n={n})",
            "xlabel": "estimate x",
            "ylabel": "variance",
            "level": "top {percent:g}%",
            "significance": "{percent:g}% significance",
        },
    },
    "ru_RU": {
        "report": {
            "title": "Моделирование: истинное априорное {true_family}, n={n}, повторений={replicates}, sigma_mean={sigma_mean}",
            "mode": "Параметры: {mode}",
            "cell": "  {estimating:<12} потери={loss:.6g} (ош. {se:.3g})  параметр={param}  сбоев={failed}",
            "param": "{mean:.4g} ({sd:.4g})",
            "no_param": "-",
            "prediction": "Спирмен (теория и моделирование, вне диагонали): {rho:.3f}",
        },
        "cli": {
            "rejected": "отклонена строка {line}: {reason}",
            "rejects_total": "отклонено строк: {count}",
            "naive_variance": "наивная оценка методом моментов tau^2 = {value:.10g}",
            "written": "записано {path}",
            "usage_error": "ошибка: {error}",
            "numerical_error": "численный сбой: {error}",
            "fetched": "загружено {name} -> {path}",
        },
        "figure": {
            "title": "Изотаксы при априорном {prior} (n={n})",
            "xlabel": "оценка x",
            "ylabel": "дисперсия",
            "level": "верхние {percent:g}%",
            "significance": "значимость {percent:g}%",
        },
    },
}
