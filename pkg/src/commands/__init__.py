from src.commands.base import CommandResult
from src.commands.data_commands import handle_generate_data
from src.commands.eval_commands import handle_evaluate, handle_retention
from src.commands.predict_commands import handle_predict
from src.commands.train_commands import handle_ablate, handle_train

__all__ = [
    "CommandResult", "handle_ablate", "handle_evaluate", "handle_generate_data",
    "handle_predict", "handle_retention", "handle_train",
]
