"""Read, validate, and interactively edit INI configurations."""

from io import StringIO
import ast
import configparser
import os
import re
import sys

from prompt_toolkit import ANSI
from prompt_toolkit import prompt as pt_prompt
from prompt_toolkit.completion import Completer, Completion

ANSI_BOLD = '\033[1m'
ANSI_CURRENT = '\033[32m'
ANSI_IDENTIFIER = '\033[36m'
ANSI_RESET = '\033[m'
ANSI_UNDERLINE = '\033[4m'
ANSI_WARNING = '\033[33m'
INDENT = '    '

SECTION_REGEX = re.compile(r'^\s*\[(.+)\]\s*$')
OPTION_REGEX = re.compile(r'^([^\s=:;#][^=:]*?)\s*[=:]')

if sys.platform == 'win32':
    os.system('color')


class CustomWordCompleter(Completer):
    """Complete known words against the text before the cursor."""

    def __init__(self, words, ignore_case=False):
        """Store the words to complete."""
        self.words = words
        self.ignore_case = ignore_case

    def get_completions(self, document, complete_event):
        """Yield the words that extend the text before the cursor."""
        typed = document.current_line_before_cursor.lstrip()
        for word in self.words:
            if self.ignore_case:
                matches = word.lower().startswith(typed.lower())
            else:
                matches = word.startswith(typed)
            if matches:
                yield Completion(word, -len(typed))


# Reading and Writing #

def read_config(config, config_path):
    """Overlay a configuration file on config."""
    try:
        config.read(config_path, encoding='utf-8')
    except configparser.Error as e:
        raise ValueError(f'{config_path}: {e}') from e


def write_config(config, config_path):
    """Write config to a file with '\\n' line endings."""
    with open(config_path, 'w', encoding='utf-8', newline='\n') as f:
        config.write(f)


def config_to_string(config):
    """Return the text that write_config would write."""
    buffer = StringIO()
    config.write(buffer)
    return buffer.getvalue()


def locate_option(config_path, section, option=None):
    """Return the 1-based line of a section or option in a file."""
    if not config_path or not os.path.isfile(config_path):
        return None
    current = None
    with open(config_path, encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            match_object = SECTION_REGEX.match(line)
            if match_object:
                current = match_object.group(1).strip()
                if option is None and current == section:
                    return number
                continue
            match_object = OPTION_REGEX.match(line)
            if (option and current == section and match_object
                    and match_object.group(1).strip().lower()
                    == option.lower()):
                return number
    return None


def describe_location(config_path, section, option=None):
    """Return a 'path:line: ' prefix for messages, or an empty string."""
    line = locate_option(config_path, section, option)
    return f'{config_path}:{line}: ' if line else ''


def check_unknown_options(default_config, config_path):
    """Raise if the file holds sections or options without defaults."""
    if not config_path or not os.path.isfile(config_path):
        return
    user_config = configparser.ConfigParser(interpolation=None)
    read_config(user_config, config_path)
    for section in user_config.sections():
        if not default_config.has_section(section):
            raise ValueError(
                f'{describe_location(config_path, section)}'
                f'unknown section [{section}]')
        for option in user_config[section]:
            if not default_config.has_option(section, option):
                raise ValueError(
                    f'{describe_location(config_path, section, option)}'
                    f'unknown option {option} in [{section}]')


# Values #

def evaluate_value(value):
    """Evaluate a Python literal, returning None if it is not one."""
    evaluated_value = None
    try:
        evaluated_value = ast.literal_eval(value)
    except (SyntaxError, ValueError):
        pass
    except (TypeError, MemoryError, RecursionError) as e:
        print(e)
        sys.exit(1)
    return evaluated_value


def get_literal(config, section, option, config_path=None, allow_text=False):
    """Return an option as a Python literal, or as text if allowed."""
    value = config[section][option]
    if value.strip() == 'None':
        return None
    evaluated_value = evaluate_value(value)
    if evaluated_value is None:
        if allow_text and value.strip():
            return value.strip()
        raise ValueError(
            f'{describe_location(config_path, section, option)}'
            f'invalid value for {option} in [{section}]: {value!r}')
    return evaluated_value


def get_typed(config, section, option, convert, config_path=None):
    """Return an option converted by convert, locating any failure."""
    value = config[section][option]
    try:
        return convert(value)
    except ValueError as e:
        raise ValueError(
            f'{describe_location(config_path, section, option)}'
            f'invalid value for {option} in [{section}]: {value!r}') from e


def get_strict_boolean(config, section, option):
    """Return an option that must read exactly True or False."""
    value = config.get(section, option)
    if value.lower() not in {'true', 'false'}:
        raise ValueError(f'Invalid boolean value for {option} in {section}.')
    return config.getboolean(section, option)


# Interactive Editing #

def modify_section(config, section, config_path, completions=None):
    """Walk the options of a section and edit them one by one."""
    if not config.has_section(section):
        print(section, 'section does not exist.')
        return False

    completions = completions or {}
    options = config.options(section)
    print(f'[{ANSI_BOLD}{section}{ANSI_RESET}]')
    index = 0
    while index < len(options):
        option = options[index]
        result = modify_option(config, section, option, config_path,
                               can_back=index > 0,
                               all_values=completions.get(option))
        if result == 'back':
            index -= 1
            continue
        if result == 'quit':
            return result
        index += 1
    return True


def modify_option(config, section, option, config_path, can_back=False,
                  all_values=None):
    """Edit, toggle, reset, or skip one option."""
    if not config.has_option(section, option):
        print(option, 'option does not exist.')
        return False

    print(f'{ANSI_IDENTIFIER}{option}{ANSI_RESET} = '
          f'{ANSI_CURRENT}{config[section][option]}{ANSI_RESET}')
    try:
        boolean_value = get_strict_boolean(config, section, option)
        answers = ['modify', 'toggle', 'default', 'quit']
    except ValueError:
        answers = ['modify', 'default', 'quit']
    if can_back:
        answers.insert(answers.index('quit'), 'back')

    answer = tidy_answer(answers)
    if answer == 'modify':
        evaluated_value = evaluate_value(config[section][option])
        if isinstance(evaluated_value, dict):
            config[section][option] = str(modify_dictionary(
                evaluated_value, level=1))
        else:
            config[section][option] = modify_value(
                'value', value=config[section][option],
                all_values=all_values)
    elif answer == 'toggle':
        config[section][option] = str(not boolean_value)
    elif answer == 'default':
        return delete_option(config, section, option, config_path)
    elif answer == 'back':
        return answer
    elif answer in {'', 'quit'}:
        return answer or None

    write_config(config, config_path)
    return True


def delete_option(config, section, option, config_path):
    """Remove an option so that its default applies again."""
    if not config.has_option(section, option):
        print(option, 'option does not exist.')
        return False
    config.remove_option(section, option)
    write_config(config, config_path)
    return True


def modify_dictionary(dictionary, level=0):
    """Edit the values of a dictionary entry by entry."""
    keys = list(dictionary)
    index = 0
    while index < len(keys):
        key = keys[index]
        value = dictionary[key]
        print(f'{INDENT * level}{ANSI_IDENTIFIER}{key}{ANSI_RESET}: '
              f'{ANSI_CURRENT}{value}{ANSI_RESET}')
        answers = ['modify', 'back', 'quit'] if index else ['modify', 'quit']
        answer = tidy_answer(answers, level=level)

        if answer == 'modify':
            text = modify_value('value', level=level, value=str(value))
            evaluated_value = evaluate_value(text)
            dictionary[key] = text if evaluated_value is None \
                else evaluated_value
        elif answer == 'back':
            index -= 1
            continue
        elif answer == 'quit':
            break
        index += 1
    return dictionary


def tidy_answer(answers, level=0):
    """Prompt for one of the answers by its underlined mnemonic."""
    initialism = ''
    highlighted = []
    for word in answers:
        mnemonic = next((char for char in word
                         if char.lower() not in initialism), None)
        if mnemonic is None:
            print('Undetermined mnemonics.')
            sys.exit(1)
        initialism += mnemonic.lower()
        highlighted.append(word.replace(
            mnemonic, f'{ANSI_UNDERLINE}{mnemonic}{ANSI_RESET}', 1))

    prompt = '/'.join(highlighted)
    answer = input(f'{INDENT * level}{prompt}: ').strip().lower()
    if answer and answer[0] in initialism:
        return answers[initialism.index(answer[0])]
    return ''


def modify_value(prompt, level=0, value='', all_values=None):
    """Prompt for a value, keeping the current one on empty input."""
    return prompt_for_input(prompt, level=level, value=value,
                            all_values=all_values)


def prompt_for_input(prompt, level=0, value='', all_values=None):
    """Prompt for text with completion of known values."""
    if value:
        prompt_prefix = (f'{INDENT * level}{prompt} '
                         f'{ANSI_CURRENT}{value}{ANSI_RESET}: ')
    else:
        prompt_prefix = f'{INDENT * level}{prompt}: '

    words = all_values or ([value] if value else None)
    if words:
        completer = CustomWordCompleter(words, ignore_case=True)
        return (pt_prompt(ANSI(prompt_prefix), completer=completer).strip()
                or value)
    return input(prompt_prefix).strip() or value
