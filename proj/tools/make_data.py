#!/usr/bin/env python3
"""Regenerates the files under data/.

usage: make_data.py <pyspellchecker wheel> <out dir>

words.txt    top English words with counts, from the pyspellchecker frequency list
general.txt  out-of-domain sentences sampled from those frequencies
corpus.txt   in-domain desk/office sentences: hand-written lines plus template fills
phrases.txt  50 held-out evaluation phrases (not in corpus.txt)
qwerty.map   touch-typing key to finger assignment
"""

import gzip
import json
import random
import re
import sys
import zipfile

VOCAB = 10000
GENERAL_SENTENCES = 20000

HANDWRITTEN = """\
please send me the report by friday
i will call you after the meeting
the printer on the second floor is out of paper
can we move the meeting to next week
thanks for the quick reply
let me know if you have any questions
i am working from home today
the project is almost done
we need to talk about the budget
i left my keys on the desk
the coffee machine is broken again
could you check the numbers in the table
my computer is very slow this morning
i have a doctor appointment at three
see you at lunch
the train was late again today
please sign the form and return it to me
we should finish the slides before noon
who is going to the conference
i forgot my password again
the new office chairs are very comfortable
our team won the prize this year
i will be on vacation next month
can you send me the file
the meeting room is booked all day
please turn off the lights when you leave
the weather is nice today
we are running out of time
i need more time to read the paper
the email did not arrive
let us meet in the kitchen
this is the best idea so far
i am sorry for the delay
the client wants a new version
we have to fix this bug today
the phone keeps ringing
i will write the summary tonight
please review my notes
the deadline is tomorrow morning
my desk is next to the window
i think we are on the right track
let me check my calendar
the keyboard is too loud
i like the new design
the store closes at nine
she works in the sales team
he is always the first one in the office
we will have pizza for lunch
thank you for your help
could you print two copies
the bus stop is right outside
i walk to work every day
the car is parked in the back
the light in the hall is broken
we need a bigger room
call me when you get home
do not forget to lock the door
the water is too cold
i am looking for a new job
my brother lives in the city
our house is near the park
the kids are playing outside
we watched a movie last night
the music is too loud
i read a good book this week
the dog is sleeping on the couch
let us go for a walk
the shop sells fresh bread
i will cook dinner tonight
the school is closed today
we can take the train tomorrow
my phone battery is dead
please close the window
it is very hot in here
the heater does not work
can you help me move the table
i bought a new pair of shoes
the plan looks good to me
we are almost there
i will see you on monday
the package arrived this morning
send my best wishes to your family
i hope you feel better soon
the answer is in the second chapter
the test was easier than i thought
we have a lot of work to do
the store is open until midnight
please wait for me at the door
the door is locked
where did you put the keys
i lost my umbrella on the bus
the elevator is out of order
my sister is coming to visit
the room is too small for all of us
i want to learn a new language
the movie starts at eight
we should leave now
the road is closed because of the snow
it might rain later today
my favorite color is blue
the garden needs water
the cat is hiding under the bed
i cannot find my glasses
the soup is too salty
we ran out of milk
please buy some eggs and bread
the bank is closed on sunday
the price went up again
i have to pay the rent
the hotel was very clean
our flight was cancelled
we missed the last train
the museum is free on tuesday
my friend told me a funny story
the game ended in a draw
i have never seen anything like it
the paper is due next week
we need to order more paper
the team meeting is at ten
the manager will be back soon
please update the schedule
the numbers do not add up
i will send you the details later
let me know what you think
the report looks great
we should ask for more money
the office will be closed on monday
the lights are on but nobody is home
i will be there in five minutes
please keep the noise down
the story has a happy ending
i am tired of waiting
the bridge is under repair
the city looks beautiful at night
my parents live in a small town
the river is very deep here
it is time to go home
the baby is finally asleep
the party was a lot of fun
we had a great time
i will never forget this day
the phone number is on the card
please write your name here
the letter came back
the company hired ten new people
the work is not finished yet
i need a break
let us start again from the top
the screen is too bright
my back hurts from sitting all day
the desk lamp is too dim
we should clean the kitchen
the fridge is empty
the window will not open
the door is stuck
my coffee is cold
the tea is too hot
i will take the stairs
the parking lot is full
we are waiting for the bus
the mail is late today
the room smells like paint
the floor is wet
the wall needs a new coat of paint
the computer needs an update
i will restart the computer
the internet is down again
please save your work
the battery is almost empty
the charger is in my bag
i left my bag in the car
the book is on the shelf
put the box on the table
the chair is broken
we bought a new table
the plant needs more light
the clock is five minutes fast
my watch stopped working
the alarm did not go off
i woke up late this morning
the traffic was terrible
the road was very busy
i took a taxi to the airport
the airport is very crowded
our bags are too heavy
the hotel room has a nice view
we walked along the beach
the sea was calm
the sun is very strong today
put on some sun cream
the sky is clear tonight
the stars are bright
the moon is full tonight
the wind is very strong
the snow is melting
spring is my favorite season
the leaves are falling
the days are getting shorter
it is getting dark outside
turn on the light please
we need more chairs
the guests will arrive soon
dinner is ready
the food was delicious
i am not hungry
can i have a glass of water
the bill please
keep the change
the waiter was very kind
the kitchen is closed
we should book a table
the restaurant is full tonight
let us try the new place
the cake is in the oven
the bread is still warm
i would like a cup of tea
the milk is in the fridge
the sugar is on the top shelf
the plates are in the sink
please do the dishes
the trash needs to go out
the car needs gas
the tires are low
the engine makes a strange noise
the bike has a flat tire
i ride my bike to work
the gym opens at six
i go running every morning
the doctor said i need rest
the medicine is on the counter
the hospital is across the street
the nurse was very helpful
the class starts at nine
the teacher gave us homework
the students are taking a test
the library is very quiet
i need to study for the exam
the lecture was very long
the professor is on leave
we have a group project
the results will be ready soon
the data looks strange
we need to run the test again
the model is not good enough
the numbers look better now
i fixed the problem
the system is back online
the server is down
the website is very slow
please reset my password
the account is locked
i sent the invoice yesterday
the payment is late
the contract needs a signature
the lawyer will call you
the meeting went well
the client is happy
the boss wants to see you
i got a new job
i start on monday
the interview went well
they offered me the job
i am moving to a new city
the new apartment is bigger
the rent is too high
we need a bigger car
the kids love the new school
the weekend went by too fast
i am looking forward to the holiday
happy birthday to you
congratulations on the new job
good luck with the exam
have a nice weekend
see you tomorrow
good morning everyone
good night and sleep well
talk to you later
what time is it
where are you now
how was your day
when does the store open
why is the door open
who called this morning
what do you want for dinner
how much does it cost
is this seat taken
are you coming with us
do you need any help
did you get my message
can you hear me
will you be home tonight
have you seen my phone
"""

# Template fills for a larger in-domain sample.
SUBJECTS = ["i", "we", "you", "they", "the team", "my boss", "our client", "the manager", "she", "he",
            "my colleague", "the new intern", "everyone", "nobody", "the office"]
VERBS = ["will send", "need to check", "can review", "should update", "have to finish", "want to print",
         "forgot to sign", "just read", "will look at", "could share", "must approve", "did not see",
         "are writing", "can fix", "will discuss"]
OBJECTS = ["the report", "the budget", "the slides", "the schedule", "the contract", "the invoice",
           "the notes", "the file", "the email", "the plan", "the numbers", "the draft", "the letter",
           "the proposal", "the form", "the list", "the results", "the summary", "the agenda", "the memo"]
TIMES = ["today", "tomorrow", "tonight", "this morning", "this afternoon", "this week", "next week",
         "on monday", "on friday", "before lunch", "after lunch", "by noon", "before the meeting",
         "after the meeting", "later", "right now", "as soon as possible", "by the end of the day"]
PLACES = ["at my desk", "in the meeting room", "in the kitchen", "at home", "in the office",
          "on the train", "at the front desk", "in the hall", "upstairs", "downstairs"]
THINGS = ["the printer", "the phone", "the coffee machine", "my laptop", "the screen", "the keyboard",
          "the mouse", "the heater", "the light", "the door", "the window", "the elevator", "the network",
          "the projector", "the scanner"]
STATES = ["is broken", "is not working", "works again", "is very slow", "is out of order", "needs a fix",
          "is making a noise", "is too loud", "is new", "is old"]
TEMPLATES = [
    "{s} {v} {o} {t}",
    "{s} {v} {o} {p}",
    "please send {o} {t}",
    "can you check {o} {t}",
    "{th} {st}",
    "{th} {st} {t}",
    "{th} {p} {st}",
    "let me know when {o} is ready",
    "i left {o} {p}",
    "do not forget {o} {t}",
    "the meeting is {t} {p}",
    "{s} will be {p} {t}",
]

PHRASES = """\
please call me when you get home
the meeting moved to friday afternoon
i will send the report tonight
the printer is out of paper again
can you bring me a cup of coffee
we should leave before the traffic starts
my laptop needs a new battery
thank you for the lovely dinner
the train leaves in ten minutes
i forgot to lock the front door
let us meet at the station
the kids are watching a movie
she wrote a long letter to her mother
the store is closed on sunday
we need more time to finish the project
he left his phone in the taxi
the water in the lake is cold
please turn down the music
i will be late for the meeting
the new schedule starts next week
our team won the game last night
the weather will be better tomorrow
could you read my notes before lunch
the window in my office will not close
we bought fresh bread at the market
my brother plays the guitar
the coffee tastes better than yesterday
i am looking for my keys
the price of gas went up again
send me the file when you are done
the doctor will see you now
it was a long day at work
we walked home in the rain
the phone rang during the movie
please check the numbers again
the dog ran across the street
the children are starting to read
i need a new pair of shoes
the hotel is close to the beach
my sister lives in a big city
the light in the kitchen is broken
we have a lot of work this week
the cake is ready to eat
i will call the bank tomorrow
the bus was full this morning
can we talk about the plan
the room was too warm for me
he is reading a book about history
let me know if you need help
the answer is on the last page
"""

# Right pinky carries the apostrophe.
QWERTY = {
    ("L", "pinky"): "qaz", ("L", "ring"): "wsx", ("L", "middle"): "edc", ("L", "index"): "rfvtgb",
    ("R", "index"): "yhnujm", ("R", "middle"): "ik", ("R", "ring"): "ol", ("R", "pinky"): "p'",
}


def main() -> None:
    wheel, out = sys.argv[1], sys.argv[2].rstrip("/")
    freq = json.loads(gzip.decompress(zipfile.ZipFile(wheel).read("spellchecker/resources/en.json.gz")))
    ranked = sorted(((w, c) for w, c in freq.items() if re.fullmatch(r"[a-z]+('[a-z]+)?", w)),
                    key=lambda wc: (-wc[1], wc[0]))
    top = ranked[:VOCAB]
    with open(f"{out}/words.txt", "w") as f:
        for w, c in top:
            f.write(f"{w} {c}\n")

    rng = random.Random(1)
    words = [w for w, _ in top]
    weights = [c for _, c in top]
    with open(f"{out}/general.txt", "w") as f:
        for _ in range(GENERAL_SENTENCES):
            f.write(" ".join(rng.choices(words, weights, k=rng.randint(4, 12))) + "\n")

    rng = random.Random(2)
    lines = HANDWRITTEN.strip().splitlines()
    seen = set(lines)
    while len(lines) < 3000:
        s = rng.choice(TEMPLATES).format(s=rng.choice(SUBJECTS), v=rng.choice(VERBS), o=rng.choice(OBJECTS),
                                         t=rng.choice(TIMES), p=rng.choice(PLACES), th=rng.choice(THINGS),
                                         st=rng.choice(STATES))
        if s not in seen:
            seen.add(s)
            lines.append(s)
    phrases = PHRASES.strip().splitlines()
    assert len(phrases) == 50
    held = set(phrases)
    with open(f"{out}/corpus.txt", "w") as f:
        for s in lines:
            if s not in held:
                f.write(s + "\n")
    with open(f"{out}/phrases.txt", "w") as f:
        f.write("\n".join(phrases) + "\n")

    vocab = set(words) | {w for s in lines for w in s.split()}
    missing = sorted({w for p in phrases for w in p.split()} - vocab)
    if missing:
        sys.exit("phrase words missing from the training text: " + " ".join(missing))

    with open(f"{out}/qwerty.map", "w") as f:
        f.write("# char hand finger\n")
        for (hand, finger), chars in QWERTY.items():
            for c in chars:
                f.write(f"{c} {hand} {finger}\n")


if __name__ == "__main__":
    main()
