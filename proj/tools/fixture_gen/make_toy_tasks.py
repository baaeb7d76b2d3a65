"""Writes the bundled toy function-calling tasks."""
import pathlib
import json
DATA = pathlib.Path(__file__).resolve().parents[2] / "data"
def gt(name,args,think="Answer with a single call."):
    return "<think>"+think+"</think>\n<tool_call>\n"+json.dumps({"name":name,"arguments":args})+"\n</tool_call>"
tools=[
 {"name":"get_weather","description":"Current weather for a city.","parameters":{
   "city":{"description":"City name.","type":"str","enum":["New York","New Delhi","San Francisco","Paris","Tokyo"]},
   "unit":{"description":"Temperature unit.","type":"str, optional","default":"celsius","enum":["celsius","fahrenheit"]}}},
 {"name":"book_flight","description":"Books a one-way flight.","parameters":{
   "origin":{"description":"IATA code of the departure airport.","type":"str","enum":["SFO","JFK","LHR","NRT"]},
   "destination":{"description":"IATA code of the arrival airport.","type":"str","enum":["SFO","JFK","LHR","NRT"]},
   "passengers":{"description":"Number of passengers.","type":"int","enum":[1,2,3,4]}}},
 {"name":"convert_currency","description":"Converts an amount between currencies.","parameters":{
   "amount":{"description":"Amount to convert.","type":"float","enum":[10,50,100,500]},
   "from_currency":{"description":"Source currency code.","type":"str","enum":["USD","EUR","JPY"]},
   "to_currency":{"description":"Target currency code.","type":"str","enum":["USD","EUR","JPY"]}}},
 {"name":"set_alarm","description":"Sets an alarm.","parameters":{
   "time":{"description":"Alarm time.","type":"str","enum":["6 am","7 am","7 pm","8 pm"]},
   "recurring":{"description":"Repeat daily.","type":"bool, optional","default":False,"enum":[True,False]}}},
]
prompts=[
 ("weather-nyc", gt("get_weather",{"city":"New York"})),
 ("weather-tokyo-f", gt("get_weather",{"city":"Tokyo","unit":"fahrenheit"})),
 ("flight-sfo-jfk", gt("book_flight",{"origin":"SFO","destination":"JFK","passengers":2})),
 ("flight-lhr-nrt", gt("book_flight",{"origin":"LHR","destination":"NRT","passengers":1})),
 ("fx-usd-eur", gt("convert_currency",{"amount":100,"from_currency":"USD","to_currency":"EUR"})),
 ("fx-jpy-usd", gt("convert_currency",{"amount":500,"from_currency":"JPY","to_currency":"USD"})),
 ("alarm-7am", gt("set_alarm",{"time":"7 am"})),
 ("alarm-8pm-daily", gt("set_alarm",{"time":"8 pm","recurring":True})),
]
task={"tools":tools,"prompts":[{"prompt_id":p,"ground_truth":g} for p,g in prompts]}
json.dump(task,open(DATA / 'toy_task_4fn.json','w'),indent=2)
# optional-parameter task: references set optional arguments to non-default values
otools=[
 {"name":"search_hotels","description":"Searches hotels in a city.","parameters":{
   "city":{"description":"City name.","type":"str","enum":["Paris","Rome","Berlin","Madrid"]},
   "stars":{"description":"Minimum star rating.","type":"int, optional","default":3,"enum":[3,4,5]},
   "sort_by":{"description":"Sort order.","type":"str, optional","default":"price","enum":["price","rating","distance"]}}},
 {"name":"send_email","description":"Sends an email.","parameters":{
   "to":{"description":"Recipient.","type":"str","enum":["alice@example.com","bob@example.com","carol@example.com"]},
   "subject":{"description":"Subject line.","type":"str","enum":["weekly report","meeting notes","invoice"]},
   "cc_manager":{"description":"Copy the manager.","type":"bool, optional","default":False,"enum":[True,False]}}},
 {"name":"create_event","description":"Creates a calendar event.","parameters":{
   "title":{"description":"Event title.","type":"str","enum":["team sync","project review","lunch"]},
   "duration_minutes":{"description":"Length of the event.","type":"int, optional","default":30,"enum":[15,30,60]},
   "reminder":{"description":"Reminder channel.","type":"str, optional","default":"none","enum":["none","email","popup"]}}},
 {"name":"translate_text","description":"Translates a phrase.","parameters":{
   "text":{"description":"Phrase to translate.","type":"str","enum":["good morning","thank you very much","where is the station"]},
   "target_language":{"description":"Target language.","type":"str, optional","default":"en","enum":["fr","de","es"]}}},
]
oprompts=[
 ("hotels-rome-5", gt("search_hotels",{"city":"Rome","stars":5,"sort_by":"rating"})),
 ("hotels-berlin", gt("search_hotels",{"city":"Berlin","sort_by":"distance"})),
 ("email-bob", gt("send_email",{"to":"bob@example.com","subject":"meeting notes","cc_manager":True})),
 ("email-carol", gt("send_email",{"to":"carol@example.com","subject":"invoice"})),
 ("event-review", gt("create_event",{"title":"project review","duration_minutes":60,"reminder":"popup"})),
 ("event-lunch", gt("create_event",{"title":"lunch","reminder":"email"})),
 ("translate-fr", gt("translate_text",{"text":"thank you very much","target_language":"fr"})),
 ("translate-de", gt("translate_text",{"text":"where is the station","target_language":"de"})),
]
json.dump({"tools":otools,"prompts":[{"prompt_id":p,"ground_truth":g} for p,g in oprompts]},open(DATA / 'toy_task_optional.json','w'),indent=2)
